#!/usr/bin/env python3
"""Masked-LM inference server for the relclust `inference` backend.

Reads one JSON request per line on stdin and answers one JSON line on stdout:

  {"op": "info"}                                   -> {"name", "hidden_dim", "mlm_head"}
  {"op": "tokenize", "text": ...}                  -> {"ids": [...], "mask": i}
                                                      or {"error": "too_long", "length": n}
  {"op": "embed", "batch": [{"ids": [...], "mask": i}, ...]} -> {"vectors": [[...], ...]}
  {"op": "top", "ids": [...], "mask": i, "m": m}   -> {"tokens": [[token, score], ...]}

The prompt placeholders [CLS], [MASK] and [SEP] are mapped to the model's own
special tokens. Embeddings are the final hidden layer at the mask position.
"""

import argparse
import json
import sys


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", required=True, help="model directory or hub name")
    ap.add_argument("--max-length", type=int, default=512)
    ap.add_argument("--device", default="cpu")
    args = ap.parse_args()

    import torch
    from transformers import AutoModelForMaskedLM, AutoTokenizer

    def reply(obj):
        sys.stdout.write(json.dumps(obj) + "\n")
        sys.stdout.flush()

    torch.set_grad_enabled(False)
    try:
        tok = AutoTokenizer.from_pretrained(args.model)
        model = AutoModelForMaskedLM.from_pretrained(args.model).to(args.device).eval()
    except Exception as exc:
        # Answer the first request with the reason instead of dying silently.
        sys.stdin.readline()
        reply({"error": "cannot load model %r: %s" % (args.model, str(exc).splitlines()[0])})
        return 1
    hidden = model.config.hidden_size

    def tokenize(text):
        text = (text.replace("[CLS]", tok.cls_token or tok.bos_token)
                    .replace("[SEP]", tok.sep_token or tok.eos_token)
                    .replace("[MASK]", tok.mask_token))
        ids = tok(text, add_special_tokens=False)["input_ids"]
        if len(ids) > args.max_length:
            return {"error": "too_long", "length": len(ids)}
        masks = [i for i, t in enumerate(ids) if t == tok.mask_token_id]
        if len(masks) != 1:
            return {"error": "expected one mask token, found %d" % len(masks)}
        return {"ids": ids, "mask": masks[0]}

    def forward(batch):
        width = max(len(b["ids"]) for b in batch)
        pad = tok.pad_token_id if tok.pad_token_id is not None else 0
        ids = torch.full((len(batch), width), pad, dtype=torch.long)
        att = torch.zeros((len(batch), width), dtype=torch.long)
        for r, b in enumerate(batch):
            ids[r, : len(b["ids"])] = torch.tensor(b["ids"])
            att[r, : len(b["ids"])] = 1
        return model(input_ids=ids.to(args.device), attention_mask=att.to(args.device),
                     output_hidden_states=True)

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            op = req.get("op")
            if op == "info":
                reply({"name": "mlm:" + args.model.rstrip("/").split("/")[-1],
                       "hidden_dim": hidden, "mlm_head": True})
            elif op == "tokenize":
                reply(tokenize(req["text"]))
            elif op == "embed":
                out = forward(req["batch"])
                last = out.hidden_states[-1]
                vecs = [last[r, b["mask"]].float().cpu().tolist() for r, b in enumerate(req["batch"])]
                reply({"vectors": vecs})
            elif op == "top":
                out = forward([{"ids": req["ids"], "mask": req["mask"]}])
                scores = out.logits[0, req["mask"]].float()
                m = min(int(req["m"]), scores.numel())
                vals, idx = torch.topk(scores, m)
                toks = tok.convert_ids_to_tokens(idx.tolist())
                reply({"tokens": [[t, float(v)] for t, v in zip(toks, vals.tolist())]})
            else:
                reply({"error": "unknown op %r" % op})
        except Exception as exc:  # report and keep serving
            reply({"error": "%s: %s" % (type(exc).__name__, exc)})


if __name__ == "__main__":
    sys.exit(main())
