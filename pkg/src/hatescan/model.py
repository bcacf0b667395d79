"""Hashed n-gram featurization and class-weighted softmax training.

The built-in classifier is multinomial logistic regression over hashed word
and character n-grams, trained with mini-batch Adam (or plain SGD) on a
weighted cross-entropy loss. Anything exposing ``predict(text)`` and
``class_list`` can stand in for it downstream, so a heavier backend can be
attached without touching the rest of the pipeline.
"""

from __future__ import annotations

import hashlib
import json
import random
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError

__all__ = [
    "FeatureConfig",
    "Hyperparams",
    "SparseVector",
    "TrainedClassifier",
    "TRANSFORMER_LEARNING_RATE",
    "featurize",
    "class_weights",
    "weighted_ce_loss",
    "train",
    "predict",
    "save",
    "load",
]

# fine-tuning rate reported for transformer backends; the self-contained
# baseline needs a much larger step and defaults to 1e-3
TRANSFORMER_LEARNING_RATE = 5e-5

_MAGIC = b"HSCM"
_VERSION = 1


@dataclass(frozen=True)
class FeatureConfig:
    hash_dim: int = 2**18
    word_ngrams: tuple = (1, 2)
    char_ngrams: tuple = (3, 4, 5)
    hash_seed: int = 0

    def __post_init__(self):
        if self.hash_dim < 2**10 or self.hash_dim & (self.hash_dim - 1):
            raise ValueError("hash_dim must be a power of two, at least 2^10")
        if not self.word_ngrams and not self.char_ngrams:
            raise ValueError("at least one n-gram family required")


@dataclass(frozen=True)
class Hyperparams:
    batch_size: int = 8
    max_epochs: int = 10
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    early_stop_patience: int = 2
    weighted_loss: bool = False
    seed: int = 0
    optimizer: str = "adam"

    def __post_init__(self):
        if min(self.batch_size, self.max_epochs, self.early_stop_patience) <= 0:
            raise ValueError("batch_size, max_epochs and patience must be positive")
        if self.learning_rate <= 0 or self.adam_eps <= 0:
            raise ValueError("learning_rate and adam_eps must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("adam betas must lie in (0, 1)")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")


@dataclass(frozen=True)
class SparseVector:
    """L2-normalized sparse feature vector with sorted unique indices."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.indices] = self.values
        return dense


@dataclass
class TrainedClassifier:
    weights: np.ndarray  # (n_classes, hash_dim)
    bias: np.ndarray  # (n_classes,)
    class_list: tuple
    feature_config: FeatureConfig
    training_log: list = field(default_factory=list)

    def __post_init__(self):
        if not self.class_list:
            raise ModelError("class_list must be non-empty")
        if len(set(self.class_list)) != len(self.class_list):
            raise ModelError("class_list contains duplicates")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise ModelError("model weights contain NaN or Inf")

    def predict(self, text: str):
        return predict(self, text)


def _hash_token(token: str, seed: int, mask: int) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, salt=seed.to_bytes(8, "little", signed=False)
    ).digest()
    return int.from_bytes(digest, "little") & mask


def featurize(text: str, config: FeatureConfig | None = None) -> SparseVector:
    """Hash word and character n-grams of a normalized text into counts.

    Word and character families are hashed in separate namespaces so a word
    bigram can never collide with a character trigram of the same letters.
    The count vector is L2-normalized; empty text gives the zero vector.
    """
    if config is None:
        config = FeatureConfig()
    mask = config.hash_dim - 1
    seed = config.hash_seed
    counts: dict[int, float] = {}

    words = text.split()
    for n in config.word_ngrams:
        for i in range(len(words) - n + 1):
            key = _hash_token(f"w{n}\x00" + " ".join(words[i : i + n]), seed, mask)
            counts[key] = counts.get(key, 0.0) + 1.0
    for n in config.char_ngrams:
        for i in range(len(text) - n + 1):
            key = _hash_token(f"c{n}\x00" + text[i : i + n], seed, mask)
            counts[key] = counts.get(key, 0.0) + 1.0

    if not counts:
        return SparseVector(np.empty(0, dtype=np.int64), np.empty(0), config.hash_dim)
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices.tolist()])
    values /= np.linalg.norm(values)
    return SparseVector(indices, values, config.hash_dim)


def class_weights(counts: dict) -> dict:
    """Inverse-frequency class weights w_c = N / (K * N_c).

    Rarer classes get weights above 1, common ones below 1, and the weighted
    count sum stays equal to N, so the overall loss scale is comparable with
    the unweighted case.
    """
    if not counts:
        raise ValueError("counts must be non-empty")
    if any(c <= 0 for c in counts.values()):
        raise ValueError("every class needs a positive count")
    total = sum(counts.values())
    k = len(counts)
    return {label: total / (k * counts[label]) for label in sorted(counts)}


def weighted_ce_loss(logits: np.ndarray, label: int, weights=1.0):
    """Weighted cross-entropy for one example.

    ``weights`` may be a scalar, a mapping from label index to weight, or an
    array indexed by label. Returns (loss, grad_logits) with
    loss = -w * log softmax(logits)[label] and
    grad = w * (softmax(logits) - onehot(label)). Stable for large logits via
    max subtraction.
    """
    if isinstance(weights, (int, float)):
        w = float(weights)
    elif isinstance(weights, dict):
        w = float(weights[label])
    else:
        w = float(np.asarray(weights)[label])
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    probs = exp / exp.sum()
    # log softmax computed from shifted logits, not log(probs), to avoid log(0)
    log_prob = shifted[label] - np.log(exp.sum())
    loss = -w * log_prob
    grad = w * probs
    grad[label] -= w
    return loss, grad


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def _example_label(example):
    if hasattr(example, "label"):
        return example.label
    if hasattr(example, "target"):
        return example.target
    raise TypeError(f"not a labeled example: {example!r}")


class _EarlyStopTracker:
    """Stop when validation loss has not improved for `patience` epochs."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = float("inf")
        self.best_epoch = 0
        self.epochs_since_best = 0

    def update(self, loss: float, epoch: int) -> bool:
        """Record one epoch's validation loss; True means stop now."""
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self.epochs_since_best = 0
            return False
        self.epochs_since_best += 1
        return self.epochs_since_best >= self.patience


def _epoch_pass(model_w, model_b, features, labels, weights_vec, hp, rng=None, opt=None):
    """One pass over the data. With an optimizer, trains in place; always
    returns (mean loss, accuracy)."""
    n = len(features)
    order = list(range(n))
    if rng is not None:
        rng.shuffle(order)

    total_loss = 0.0
    correct = 0
    for start in range(0, n, hp.batch_size):
        batch = order[start : start + hp.batch_size]
        grad_w_updates = []
        grad_b = np.zeros_like(model_b)
        batch_loss = 0.0
        for i in batch:
            vec = features[i]
            logits = model_w[:, vec.indices] @ vec.values + model_b
            loss, grad = weighted_ce_loss(logits, labels[i], weights_vec[labels[i]])
            batch_loss += loss
            total_loss += loss
            if int(np.argmax(logits)) == labels[i]:
                correct += 1
            if opt is not None:
                grad_w_updates.append((vec, grad))
                grad_b += grad
        if opt is None:
            continue
        batch_size = len(batch)
        if not np.isfinite(batch_loss):
            raise ModelError(
                f"training diverged: non-finite loss in batch starting at {start}"
            )
        grad_w = np.zeros_like(model_w)
        for vec, grad in grad_w_updates:
            grad_w[:, vec.indices] += np.outer(grad, vec.values)
        grad_w /= batch_size
        grad_b /= batch_size
        opt.apply(model_w, model_b, grad_w, grad_b)

    return total_loss / n, correct / n


class _AdamState:
    def __init__(self, w, b, hp: Hyperparams):
        self.hp = hp
        self.t = 0
        self.m_w = np.zeros_like(w)
        self.v_w = np.zeros_like(w)
        self.m_b = np.zeros_like(b)
        self.v_b = np.zeros_like(b)

    def apply(self, w, b, grad_w, grad_b):
        hp = self.hp
        self.t += 1
        b1t = 1 - hp.adam_beta1**self.t
        b2t = 1 - hp.adam_beta2**self.t
        for param, grad, m, v in (
            (w, grad_w, self.m_w, self.v_w),
            (b, grad_b, self.m_b, self.v_b),
        ):
            m *= hp.adam_beta1
            m += (1 - hp.adam_beta1) * grad
            v *= hp.adam_beta2
            v += (1 - hp.adam_beta2) * grad * grad
            param -= hp.learning_rate * (m / b1t) / (np.sqrt(v / b2t) + hp.adam_eps)


class _SgdState:
    def __init__(self, hp: Hyperparams):
        self.hp = hp

    def apply(self, w, b, grad_w, grad_b):
        w -= self.hp.learning_rate * grad_w
        b -= self.hp.learning_rate * grad_b


def train(
    train_examples,
    val_examples,
    hp: Hyperparams | None = None,
    fc: FeatureConfig | None = None,
) -> TrainedClassifier:
    """Train the baseline classifier with mini-batch updates.

    Classes are read off the training labels (sorted). With weighted_loss the
    per-class weights come from the training distribution. Validation drives
    early stopping; when it triggers, the returned weights are the snapshot
    from the best validation epoch, not the last one. An empty validation set
    disables early stopping and the final weights are returned.
    """
    if hp is None:
        hp = Hyperparams()
    if fc is None:
        fc = FeatureConfig()
    train_examples = list(train_examples)
    val_examples = list(val_examples)
    if not train_examples:
        raise ValueError("training set is empty")

    class_list = tuple(sorted({_example_label(e) for e in train_examples}))
    class_index = {label: i for i, label in enumerate(class_list)}

    if hp.weighted_loss:
        label_counts: dict = {}
        for e in train_examples:
            label = _example_label(e)
            label_counts[label] = label_counts.get(label, 0) + 1
        by_label = class_weights(label_counts)
        weights_vec = np.array([by_label[c] for c in class_list])
    else:
        weights_vec = np.ones(len(class_list))

    train_feats = [featurize(e.text, fc) for e in train_examples]
    train_labels = [class_index[_example_label(e)] for e in train_examples]
    val_feats = [featurize(e.text, fc) for e in val_examples]
    val_labels = []
    for e in val_examples:
        label = _example_label(e)
        if label not in class_index:
            raise ValueError(f"validation label {label!r} never seen in training")
        val_labels.append(class_index[label])

    w = np.zeros((len(class_list), fc.hash_dim))
    b = np.zeros(len(class_list))
    rng = random.Random(hp.seed)
    opt = _AdamState(w, b, hp) if hp.optimizer == "adam" else _SgdState(hp)
    tracker = _EarlyStopTracker(hp.early_stop_patience)
    best_snapshot = (w.copy(), b.copy())
    log: list[dict] = []

    for epoch in range(1, hp.max_epochs + 1):
        train_loss, train_acc = _epoch_pass(
            w, b, train_feats, train_labels, weights_vec, hp, rng=rng, opt=opt
        )
        entry = {
            "epoch": epoch,
            "train_loss": float(train_loss),
            "train_accuracy": float(train_acc),
            "val_loss": None,
            "val_accuracy": None,
        }
        stop = False
        if val_examples:
            val_loss, val_acc = _epoch_pass(
                w, b, val_feats, val_labels, weights_vec, hp
            )
            entry["val_loss"] = float(val_loss)
            entry["val_accuracy"] = float(val_acc)
            stop = tracker.update(val_loss, epoch)
            if tracker.best_epoch == epoch:
                best_snapshot = (w.copy(), b.copy())
        log.append(entry)
        if stop:
            break

    if val_examples:
        w, b = best_snapshot
    return TrainedClassifier(
        weights=w, bias=b, class_list=class_list, feature_config=fc, training_log=log
    )


def predict(model: TrainedClassifier, text: str):
    """Return (label, probs) for one normalized text.

    Ties in the probability vector resolve to the lowest class index, so
    prediction is deterministic even for degenerate models.
    """
    vec = featurize(text, model.feature_config)
    logits = model.weights[:, vec.indices] @ vec.values + model.bias
    probs = _softmax(logits)
    return model.class_list[int(np.argmax(probs))], probs


def save(model: TrainedClassifier, path: str) -> None:
    """Write the versioned binary model file (little-endian, checksummed)."""
    weight_bytes = model.weights.astype("<f8").tobytes() + model.bias.astype("<f8").tobytes()
    header = {
        "class_list": list(model.class_list),
        "feature_config": {
            "hash_dim": model.feature_config.hash_dim,
            "word_ngrams": list(model.feature_config.word_ngrams),
            "char_ngrams": list(model.feature_config.char_ngrams),
            "hash_seed": model.feature_config.hash_seed,
        },
        "n_classes": len(model.class_list),
        "payload_crc32": zlib.crc32(weight_bytes),
        "training_log": model.training_log,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(weight_bytes)


def load(path: str) -> TrainedClassifier:
    """Read a model file back; bit-exact inverse of ``save``."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ModelError(f"cannot read model file: {exc}") from exc

    if len(blob) < 12 or blob[:4] != _MAGIC:
        raise ModelError(f"{path}: not a model file (bad magic)")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != _VERSION:
        raise ModelError(f"{path}: unsupported model version {version}")
    (header_len,) = struct.unpack("<I", blob[8:12])
    if len(blob) < 12 + header_len:
        raise ModelError(f"{path}: truncated header")
    try:
        header = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
        class_list = tuple(header["class_list"])
        fc = FeatureConfig(
            hash_dim=header["feature_config"]["hash_dim"],
            word_ngrams=tuple(header["feature_config"]["word_ngrams"]),
            char_ngrams=tuple(header["feature_config"]["char_ngrams"]),
            hash_seed=header["feature_config"]["hash_seed"],
        )
        crc_expected = header["payload_crc32"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ModelError(f"{path}: corrupt header: {exc}") from exc

    k = len(class_list)
    payload = blob[12 + header_len :]
    expected_len = (k * fc.hash_dim + k) * 8
    if len(payload) != expected_len:
        raise ModelError(
            f"{path}: weight payload is {len(payload)} bytes, expected {expected_len}"
        )
    if zlib.crc32(payload) != crc_expected:
        raise ModelError(f"{path}: checksum mismatch, file is corrupt")
    weights = np.frombuffer(payload[: k * fc.hash_dim * 8], dtype="<f8").reshape(k, fc.hash_dim)
    bias = np.frombuffer(payload[k * fc.hash_dim * 8 :], dtype="<f8")
    return TrainedClassifier(
        weights=weights.astype(np.float64),
        bias=bias.astype(np.float64),
        class_list=class_list,
        feature_config=fc,
        training_log=header.get("training_log", []),
    )
