"""NumPy implementation of the hot kernels.

This is the portable fallback and the behavioural reference for the
compiled extension. All three entry points are pure: they never mutate
their inputs.

Weight packing convention (shared with the compiled backend): for layer
dims ``(d0, d1, ..., dL)`` the flat vector holds, per layer, the row-major
``(in, out)`` weight matrix followed by the ``(out,)`` bias, concatenated
in layer order. Hidden activations are ReLU, the output is a softmax, and
probabilities are floored at 1e-12 before any log.
"""

import numpy as np

PROB_FLOOR = 1e-12


def n_weights(dims):
    """Total flat-vector length for the given layer dims."""
    return sum(i * o + o for i, o in zip(dims[:-1], dims[1:]))


def layer_views(dims, weights):
    """Views (no copies) of (W, b) per layer into the flat vector."""
    out = []
    offset = 0
    for i, o in zip(dims[:-1], dims[1:]):
        w = weights[offset:offset + i * o].reshape(i, o)
        offset += i * o
        b = weights[offset:offset + o]
        offset += o
        out.append((w, b))
    return out


def _forward_cached(dims, weights, x):
    """Forward pass returning all post-activation layer outputs."""
    acts = [x]
    layers = layer_views(dims, weights)
    h = x
    for w, b in layers[:-1]:
        h = np.maximum(h @ w + b, 0.0)
        acts.append(h)
    w, b = layers[-1]
    logits = h @ w + b
    logits = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    probs = e / e.sum(axis=1, keepdims=True)
    return acts, probs


def forward_probs(dims, weights, x):
    """Class probabilities, one row per input row."""
    if x.shape[0] == 0:
        return np.empty((0, dims[-1]), dtype=np.float64)
    return _forward_cached(dims, weights, x)[1]


def loss_and_grad(dims, weights, x, y):
    """Mean cross-entropy over the batch and its gradient w.r.t. weights."""
    n = x.shape[0]
    acts, probs = _forward_cached(dims, weights, x)
    rows = np.arange(n)
    loss = float(-np.log(np.maximum(probs[rows, y], PROB_FLOOR)).mean())

    grad = np.zeros_like(weights)
    grad_layers = layer_views(dims, grad)
    layers = layer_views(dims, weights)

    delta = probs.copy()
    delta[rows, y] -= 1.0
    delta /= n
    for l in range(len(layers) - 1, -1, -1):
        gw, gb = grad_layers[l]
        gw[...] = acts[l].T @ delta
        gb[...] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ layers[l][0].T) * (acts[l] > 0.0)
    return loss, grad


def adam_step(params, grad, m, v, step, lr, beta1, beta2, eps, weight_decay):
    """One bias-corrected Adam step; L2 decay is added to the gradient.

    ``step`` is the 1-based index of this update. Returns new
    (params, m, v) arrays.
    """
    g = grad + weight_decay * params
    m_new = beta1 * m + (1.0 - beta1) * g
    v_new = beta2 * v + (1.0 - beta2) * g * g
    m_hat = m_new / (1.0 - beta1 ** step)
    v_hat = v_new / (1.0 - beta2 ** step)
    params_new = params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return params_new, m_new, v_new
