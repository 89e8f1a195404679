"""Minimal reverse-mode autodiff over float64 numpy arrays.

A ``Tape`` records every primitive operation in forward order; ``backward``
replays the adjoints in exact reverse order. ``ParamStore`` holds named
trainable tensors whose gradients the tape populates.
"""
from __future__ import annotations

import json
import struct

import numpy as np

# Probability floor used by cross_entropy so a zero predicted probability
# still yields a finite loss.
PROB_EPS = 1e-12

_MAGIC = b"HATN"


class Tensor:
    """A value with a gradient accumulator of the same shape."""

    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.value.shape})"


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape``, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tape:
    """Ordered record of primitive ops, replayed in reverse by backward().

    Every tensor an op touches is tracked so backward() can zero all
    gradients first; replaying the same tape twice therefore produces
    bitwise-identical gradients.
    """

    def __init__(self):
        self._backward_ops = []
        self._tensors = []
        self._seen = set()

    # -- bookkeeping ------------------------------------------------------

    def _track(self, *tensors):
        for t in tensors:
            if id(t) not in self._seen:
                self._seen.add(id(t))
                self._tensors.append(t)

    def _emit(self, out, backward_fn, *inputs):
        self._track(*inputs)
        self._track(out)
        self._backward_ops.append(backward_fn)
        return out

    def tensor(self, value) -> Tensor:
        """Wrap a constant or leaf value as a tracked tensor."""
        t = Tensor(value)
        self._track(t)
        return t

    def backward(self, loss: Tensor):
        """Populate gradients of every tensor reachable from ``loss``."""
        if loss.value.size != 1:
            raise ValueError("backward expects a scalar loss")
        if not np.all(np.isfinite(loss.value)):
            raise ValueError("non-finite loss")
        for t in self._tensors:
            t.grad.fill(0.0)
        loss.grad[...] = 1.0
        for fn in reversed(self._backward_ops):
            fn()

    # -- primitives -------------------------------------------------------

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        out = Tensor(a.value + b.value)

        def bw():
            a.grad += _unbroadcast(out.grad, a.grad.shape)
            b.grad += _unbroadcast(out.grad, b.grad.shape)

        return self._emit(out, bw, a, b)

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        out = Tensor(a.value - b.value)

        def bw():
            a.grad += _unbroadcast(out.grad, a.grad.shape)
            b.grad -= _unbroadcast(out.grad, b.grad.shape)

        return self._emit(out, bw, a, b)

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        out = Tensor(a.value * b.value)

        def bw():
            a.grad += _unbroadcast(out.grad * b.value, a.grad.shape)
            b.grad += _unbroadcast(out.grad * a.value, b.grad.shape)

        return self._emit(out, bw, a, b)

    def scale(self, a: Tensor, c: float) -> Tensor:
        out = Tensor(a.value * c)

        def bw():
            a.grad += out.grad * c

        return self._emit(out, bw, a)

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        out = Tensor(a.value @ b.value)

        def bw():
            a.grad += out.grad @ b.value.T
            b.grad += a.value.T @ out.grad

        return self._emit(out, bw, a, b)

    def sigmoid(self, a: Tensor) -> Tensor:
        s = 1.0 / (1.0 + np.exp(-a.value))
        out = Tensor(s)

        def bw():
            a.grad += out.grad * s * (1.0 - s)

        return self._emit(out, bw, a)

    def tanh(self, a: Tensor) -> Tensor:
        y = np.tanh(a.value)
        out = Tensor(y)

        def bw():
            a.grad += out.grad * (1.0 - y * y)

        return self._emit(out, bw, a)

    def abs(self, a: Tensor) -> Tensor:
        out = Tensor(np.abs(a.value))

        def bw():
            a.grad += out.grad * np.sign(a.value)

        return self._emit(out, bw, a)

    def sum(self, a: Tensor, axis=None, keepdims=False) -> Tensor:
        out = Tensor(a.value.sum(axis=axis, keepdims=keepdims))

        def bw():
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            a.grad += np.broadcast_to(g, a.grad.shape)

        return self._emit(out, bw, a)

    def mean(self, a: Tensor) -> Tensor:
        n = a.value.size
        out = Tensor(a.value.mean())

        def bw():
            a.grad += out.grad / n

        return self._emit(out, bw, a)

    def concat_cols(self, parts) -> Tensor:
        parts = list(parts)
        out = Tensor(np.concatenate([p.value for p in parts], axis=1))
        widths = [p.value.shape[1] for p in parts]

        def bw():
            start = 0
            for p, w in zip(parts, widths):
                p.grad += out.grad[:, start:start + w]
                start += w

        return self._emit(out, bw, *parts)

    def slice_cols(self, a: Tensor, start: int, stop: int) -> Tensor:
        out = Tensor(a.value[:, start:stop])

        def bw():
            a.grad[:, start:stop] += out.grad

        return self._emit(out, bw, a)

    def pad_cols(self, a: Tensor, total: int) -> Tensor:
        """Zero-pad columns on the right up to ``total``."""
        rows, cols = a.value.shape
        if cols > total:
            raise ValueError(f"cannot pad {cols} columns down to {total}")
        val = np.zeros((rows, total))
        val[:, :cols] = a.value
        out = Tensor(val)

        def bw():
            a.grad += out.grad[:, :cols]

        return self._emit(out, bw, a)

    def gather_rows(self, table: Tensor, idx) -> Tensor:
        """Row lookup (embedding gather); gradients scatter-add back."""
        idx = np.asarray(idx)
        if idx.min() < 0 or idx.max() >= table.value.shape[0]:
            raise IndexError("gather index out of range")
        out = Tensor(table.value[idx])

        def bw():
            np.add.at(table.grad, idx, out.grad)

        return self._emit(out, bw, table)

    def softmax_masked(self, scores: Tensor, mask) -> Tensor:
        """Row-wise softmax restricted to positions where ``mask`` is 1.

        Masked-out positions are exactly 0 in the output. Numerically
        stable via max-subtraction over the masked-in entries.
        """
        mask = np.asarray(mask, dtype=np.float64)
        s = scores.value
        squeeze = s.ndim == 1
        if squeeze:
            s = s[None, :]
            mask = mask[None, :]
        if np.any(mask.sum(axis=1) == 0):
            raise ValueError("empty attention support")
        shifted = np.where(mask > 0, s, -np.inf)
        m = shifted.max(axis=1, keepdims=True)
        e = np.exp(np.where(mask > 0, s - m, 0.0)) * mask
        p = e / e.sum(axis=1, keepdims=True)
        out = Tensor(p[0] if squeeze else p)

        def bw():
            g = out.grad[None, :] if squeeze else out.grad
            inner = (g * p).sum(axis=1, keepdims=True)
            ds = p * (g - inner)
            scores.grad += ds[0] if squeeze else ds

        return self._emit(out, bw, scores)

    def cross_entropy(self, pred: Tensor, target) -> Tensor:
        """-sum(target * ln(max(pred, eps))) per row; scalar for 1-D input.

        ``target`` is a constant one-hot array of the same shape.
        """
        target = np.asarray(target, dtype=np.float64)
        if target.shape != pred.value.shape:
            raise ValueError(
                f"shape mismatch: pred {pred.value.shape} vs target {target.shape}")
        clamped = np.maximum(pred.value, PROB_EPS)
        losses = -(target * np.log(clamped)).sum(axis=-1)
        out = Tensor(losses)

        def bw():
            g = np.expand_dims(out.grad, -1) if pred.value.ndim > 1 else out.grad
            active = pred.value > PROB_EPS
            pred.grad += g * np.where(active, -target / clamped, 0.0)

        return self._emit(out, bw, pred)


class ParamStore:
    """Named trainable tensors; gradient shape always mirrors value shape."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        t = Tensor(value)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grads(self):
        for t in self._params.values():
            t.grad.fill(0.0)

    def copy_values(self) -> dict[str, np.ndarray]:
        return {k: t.value.copy() for k, t in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]):
        for k, t in self._params.items():
            if k not in values:
                raise KeyError(f"missing parameter: {k}")
            if values[k].shape != t.value.shape:
                raise ValueError(f"shape mismatch for {k}")
            t.value[...] = values[k]

    def n_entries(self) -> int:
        return sum(t.value.size for t in self._params.values())


def save_arrays(path, arrays: dict[str, np.ndarray], meta: dict | None = None,
                version: int = 1):
    """Write named float64 arrays plus JSON metadata to a deterministic
    binary container (byte-identical for identical inputs)."""
    names = list(arrays)
    header = {
        "version": version,
        "meta": meta or {},
        "arrays": [{"name": n, "shape": list(arrays[n].shape)} for n in names],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<II", version, len(blob)))
        f.write(blob)
        for n in names:
            f.write(np.ascontiguousarray(arrays[n], dtype=np.float64)
                    .astype("<f8").tobytes())


def load_arrays(path):
    """Read back a container written by save_arrays -> (arrays, meta)."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not a parameter container: {path}")
        version, hlen = struct.unpack("<II", f.read(8))
        header = json.loads(f.read(hlen).decode("utf-8"))
        arrays = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(f.read(count * 8), dtype="<f8")
            arrays[spec["name"]] = data.reshape(shape).astype(np.float64)
    return arrays, header.get("meta", {})


def grad_check(loss_fn, params: ParamStore, eps: float = 1e-5) -> float:
    """Max relative error between tape gradients and central differences.

    ``loss_fn(tape, params)`` must build and return a scalar loss tensor,
    deterministically for fixed parameter values.
    """
    tape = Tape()
    loss = loss_fn(tape, params)
    if not np.all(np.isfinite(loss.value)):
        raise ValueError("non-finite loss")
    tape.backward(loss)
    analytic = {name: t.grad.copy() for name, t in params.items()}

    worst = 0.0
    for name, t in params.items():
        flat = t.value.reshape(-1)
        aflat = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(loss_fn(Tape(), params).value)
            flat[i] = orig - eps
            down = float(loss_fn(Tape(), params).value)
            flat[i] = orig
            fd = (up - down) / (2.0 * eps)
            rel = abs(aflat[i] - fd) / max(abs(aflat[i]), abs(fd), 1e-8)
            worst = max(worst, rel)
    return worst
