"""Generate the mini-encoder test fixture.

Builds a transformers.js-loadable model directory containing a
character-level WordPiece tokenizer and a minimal ONNX graph (one
Gather over a seeded 384-dim embedding table, emitting
last_hidden_state). The exporter's real code path (tokenize -> ONNX
session -> mean pooling -> L2 normalize) runs against it offline; with
network access the same code loads the published 384-dim encoder
instead.

The ONNX protobuf is hand-encoded because this environment has no
onnx package; the graph is tiny and static.

Usage: python3 build_fixture.py [output_dir]
"""

import json
import string
import sys
from pathlib import Path

import numpy as np

DIM = 384
SEED = 20240601


def varint(value: int) -> bytes:
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def field_varint(field: int, value: int) -> bytes:
    return varint(field << 3) + varint(value)


def field_bytes(field: int, payload: bytes) -> bytes:
    return varint((field << 3) | 2) + varint(len(payload)) + payload


def field_string(field: int, text: str) -> bytes:
    return field_bytes(field, text.encode("utf-8"))


def dim_param(name: str) -> bytes:
    # TensorShapeProto.Dimension { dim_param = 2 }
    return field_bytes(1, field_string(2, name))


def dim_value(value: int) -> bytes:
    # TensorShapeProto.Dimension { dim_value = 1 }
    return field_bytes(1, field_varint(1, value))


def tensor_type(elem_type: int, shape_dims: bytes) -> bytes:
    # TypeProto { tensor_type = 1 { elem_type = 1, shape = 2 } }
    return field_bytes(1, field_varint(1, elem_type) + field_bytes(2, shape_dims))


def value_info(name: str, elem_type: int, shape_dims: bytes) -> bytes:
    return field_string(1, name) + field_bytes(2, tensor_type(elem_type, shape_dims))


def build_vocab() -> list[str]:
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    letters = string.ascii_lowercase + string.digits
    vocab.extend(letters)
    vocab.extend(f"##{ch}" for ch in letters)
    vocab.extend([".", ",", "!", "?", "'", "-", "(", ")"])
    return vocab


def build_onnx(vocab_size: int) -> bytes:
    rng = np.random.default_rng(SEED)
    table = rng.normal(0.0, 0.3, size=(vocab_size, DIM)).astype("<f4")

    # NodeProto: Gather(token_embeddings, input_ids, axis=0)
    attr_axis = field_string(1, "axis") + field_varint(3, 0) + field_varint(20, 2)  # INT
    node = b"".join(
        [
            field_string(1, "token_embeddings"),
            field_string(1, "input_ids"),
            field_string(2, "last_hidden_state"),
            field_string(3, "embed"),
            field_string(4, "Gather"),
            field_bytes(5, attr_axis),
        ]
    )

    # TensorProto initializer: dims [vocab, DIM], FLOAT, raw little-endian data
    tensor = b"".join(
        [
            field_varint(1, vocab_size),
            field_varint(1, DIM),
            field_varint(2, 1),  # data_type FLOAT
            field_string(8, "token_embeddings"),
            field_bytes(9, table.tobytes()),
        ]
    )

    graph = b"".join(
        [
            field_bytes(1, node),
            field_string(2, "mini_encoder"),
            field_bytes(5, tensor),
            field_bytes(
                11, value_info("input_ids", 7, dim_param("batch") + dim_param("sequence"))
            ),
            field_bytes(
                12,
                value_info(
                    "last_hidden_state",
                    1,
                    dim_param("batch") + dim_param("sequence") + dim_value(DIM),
                ),
            ),
        ]
    )

    opset = field_varint(2, 13)  # default (onnx) domain, version 13
    return b"".join(
        [
            field_varint(1, 8),  # ir_version
            field_string(2, "hir-fixture"),
            field_bytes(7, graph),
            field_bytes(8, opset),
        ]
    )


def build_tokenizer(vocab: list[str], out_dir: Path) -> None:
    from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors

    ids = {token: i for i, token in enumerate(vocab)}
    tokenizer = Tokenizer(
        models.WordPiece(vocab=ids, unk_token="[UNK]", max_input_chars_per_word=100)
    )
    tokenizer.normalizer = normalizers.BertNormalizer(lowercase=True)
    tokenizer.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    tokenizer.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B:1 [SEP]:1",
        special_tokens=[("[CLS]", ids["[CLS]"]), ("[SEP]", ids["[SEP]"])],
    )
    tokenizer.save(str(out_dir / "tokenizer.json"))
    tokenizer_config = {
        "tokenizer_class": "BertTokenizer",
        "do_lower_case": True,
        "model_max_length": 256,
        "cls_token": "[CLS]",
        "sep_token": "[SEP]",
        "pad_token": "[PAD]",
        "unk_token": "[UNK]",
        "mask_token": "[MASK]",
    }
    (out_dir / "tokenizer_config.json").write_text(
        json.dumps(tokenizer_config, indent=2), encoding="utf-8"
    )


def main(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab = build_vocab()
    (out_dir / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    build_tokenizer(vocab, out_dir)

    config = {
        "model_type": "bert",
        "architectures": ["BertModel"],
        "hidden_size": DIM,
        "vocab_size": len(vocab),
        "num_hidden_layers": 1,
        "num_attention_heads": 6,
        "intermediate_size": 512,
        "max_position_embeddings": 512,
        "pad_token_id": 0,
    }
    (out_dir / "config.json").write_text(json.dumps(config, indent=2), encoding="utf-8")

    onnx_dir = out_dir / "onnx"
    onnx_dir.mkdir(exist_ok=True)
    (onnx_dir / "model.onnx").write_bytes(build_onnx(len(vocab)))
    print(f"fixture written to {out_dir} (vocab={len(vocab)}, dim={DIM})")


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "mini-encoder"
    main(target)
