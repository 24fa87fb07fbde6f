"""Hot loops of the model: the LSTM recurrence and its backward pass.

Each kernel has a pure-numpy implementation (``*_numpy``) and a numba
implementation (``*_numba``). The public names dispatch to numba when it is
available and not disabled through ``PAAT_DISABLE_NUMBA``.

Arrays are time-major: row ``t`` holds step ``t``. Gate columns are stacked
``[i, f, g, o]``, so a ``4u``-wide pre-activation row holds input, forget,
cell-candidate and output gates in that order.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit


def lstm_forward_numpy(pre_x, w_h):
    """Run the recurrence given input pre-activations ``pre_x`` (N x 4u).

    ``w_h`` is the recurrent matrix (4u x u). Returns ``(gates, cells,
    hidden)``: activated gates (N x 4u), cell states and hidden states (N x u).
    """
    n, four_u = pre_x.shape
    u = four_u // 4
    gates = np.empty((n, four_u))
    cells = np.empty((n, u))
    hidden = np.empty((n, u))
    h = np.zeros(u)
    c = np.zeros(u)
    w_h_t = w_h.T
    for t in range(n):
        z = pre_x[t] + h @ w_h_t
        with np.errstate(over="ignore"):
            s = 1.0 / (1.0 + np.exp(-z))
        i, f, o = s[:u], s[u:2 * u], s[3 * u:]
        g = np.tanh(z[2 * u:3 * u])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[t, :u] = i
        gates[t, u:2 * u] = f
        gates[t, 2 * u:3 * u] = g
        gates[t, 3 * u:] = o
        cells[t] = c
        hidden[t] = h
    return gates, cells, hidden


def lstm_backward_numpy(d_hidden, gates, cells, w_h):
    """Backpropagate ``d_hidden`` (N x u) to gate pre-activations (N x 4u)."""
    n, u = d_hidden.shape
    d_pre = np.empty((n, 4 * u))
    dh_next = np.zeros(u)
    dc_next = np.zeros(u)
    zero = np.zeros(u)
    for t in range(n - 1, -1, -1):
        i = gates[t, :u]
        f = gates[t, u:2 * u]
        g = gates[t, 2 * u:3 * u]
        o = gates[t, 3 * u:]
        c_prev = cells[t - 1] if t > 0 else zero
        tc = np.tanh(cells[t])
        dh = d_hidden[t] + dh_next
        dc = dh * o * (1.0 - tc * tc) + dc_next
        dz = d_pre[t]
        dz[:u] = dc * g * i * (1.0 - i)
        dz[u:2 * u] = dc * c_prev * f * (1.0 - f)
        dz[2 * u:3 * u] = dc * i * (1.0 - g * g)
        dz[3 * u:] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dh_next = dz @ w_h
    return d_pre


@njit(cache=True)
def _lstm_forward_jit(pre_x, w_h):
    n, four_u = pre_x.shape
    u = four_u // 4
    gates = np.empty((n, four_u))
    cells = np.empty((n, u))
    hidden = np.empty((n, u))
    h = np.zeros(u)
    c = np.zeros(u)
    z = np.empty(four_u)
    w_h_t = np.ascontiguousarray(w_h.T)
    for t in range(n):
        for r in range(four_u):
            z[r] = pre_x[t, r]
        for j in range(u):
            hj = h[j]
            for r in range(four_u):
                z[r] += w_h_t[j, r] * hj
        for j in range(u):
            i = 1.0 / (1.0 + np.exp(-z[j]))
            f = 1.0 / (1.0 + np.exp(-z[u + j]))
            g = np.tanh(z[2 * u + j])
            o = 1.0 / (1.0 + np.exp(-z[3 * u + j]))
            c[j] = f * c[j] + i * g
            h[j] = o * np.tanh(c[j])
            gates[t, j] = i
            gates[t, u + j] = f
            gates[t, 2 * u + j] = g
            gates[t, 3 * u + j] = o
            cells[t, j] = c[j]
            hidden[t, j] = h[j]
    return gates, cells, hidden


@njit(cache=True)
def _lstm_backward_jit(d_hidden, gates, cells, w_h):
    n, u = d_hidden.shape
    d_pre = np.empty((n, 4 * u))
    dh_next = np.zeros(u)
    dc_next = np.zeros(u)
    for t in range(n - 1, -1, -1):
        for j in range(u):
            i = gates[t, j]
            f = gates[t, u + j]
            g = gates[t, 2 * u + j]
            o = gates[t, 3 * u + j]
            c_prev = cells[t - 1, j] if t > 0 else 0.0
            tc = np.tanh(cells[t, j])
            dh = d_hidden[t, j] + dh_next[j]
            dc = dh * o * (1.0 - tc * tc) + dc_next[j]
            d_pre[t, j] = dc * g * i * (1.0 - i)
            d_pre[t, u + j] = dc * c_prev * f * (1.0 - f)
            d_pre[t, 2 * u + j] = dc * i * (1.0 - g * g)
            d_pre[t, 3 * u + j] = dh * tc * o * (1.0 - o)
            dc_next[j] = dc * f
        for j in range(u):
            dh_next[j] = 0.0
        for r in range(4 * u):
            d = d_pre[t, r]
            for j in range(u):
                dh_next[j] += w_h[r, j] * d
    return d_pre


if HAVE_NUMBA:
    lstm_forward_numba = _lstm_forward_jit
    lstm_backward_numba = _lstm_backward_jit
    lstm_forward = lstm_forward_numba
    lstm_backward = lstm_backward_numba
else:
    lstm_forward_numba = None
    lstm_backward_numba = None
    lstm_forward = lstm_forward_numpy
    lstm_backward = lstm_backward_numpy
