#include "relclust/matrix.hpp"

#include <cmath>

#include "relclust/error.hpp"

namespace relclust {

MatrixView::MatrixView(std::span<const float> values, std::size_t n, std::size_t d)
    : data(values), rows(n), cols(d) {
    if (values.size() != n * d) {
        throw Error(ErrorKind::Argument, "matrix view size does not match its shape");
    }
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                                 std::vector<std::string> instance_ids, std::string template_id,
                                 std::string backend_name, bool normalized)
    : rows_(rows),
      dim_(dim),
      data_(std::move(data)),
      instance_ids_(std::move(instance_ids)),
      template_id_(std::move(template_id)),
      backend_name_(std::move(backend_name)),
      normalized_(normalized) {
    if (data_.size() != rows_ * dim_) {
        throw Error(ErrorKind::Argument, "embedding data has " + std::to_string(data_.size()) +
                                             " values, expected " + std::to_string(rows_ * dim_));
    }
    if (instance_ids_.size() != rows_) {
        throw Error(ErrorKind::Argument, "embedding matrix needs one instance id per row");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw Error(ErrorKind::Argument,
                        "non-finite embedding value in row " + std::to_string(i / (dim_ ? dim_ : 1)));
        }
    }
}

}  // namespace relclust
