#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace relclust {

// Non-owning row-major view over n x d floats.
struct MatrixView {
    std::span<const float> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    MatrixView() = default;
    MatrixView(std::span<const float> values, std::size_t n, std::size_t d);

    std::span<const float> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    // Throws Error(Argument) on shape mismatch or non-finite entries.
    EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                    std::vector<std::string> instance_ids, std::string template_id,
                    std::string backend_name, bool normalized = false);

    std::size_t rows() const { return rows_; }
    std::size_t dim() const { return dim_; }
    std::span<const float> data() const { return data_; }
    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(data_).subspan(i * dim_, dim_);
    }
    const std::vector<std::string>& instance_ids() const { return instance_ids_; }
    const std::string& template_id() const { return template_id_; }
    const std::string& backend_name() const { return backend_name_; }
    bool normalized() const { return normalized_; }

    MatrixView view() const { return MatrixView(data_, rows_, dim_); }

    bool operator==(const EmbeddingMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> data_;
    std::vector<std::string> instance_ids_;
    std::string template_id_;
    std::string backend_name_;
    bool normalized_ = false;
};

}  // namespace relclust
