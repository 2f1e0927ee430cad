"""Pure-Python sender loop; the reference the compiled kernel must match bit for bit.

State is passed in small mutable arrays so both implementations share one
calling convention:

* ``fstate = [x_hat, p]``
* ``istate = [j, gap, n_times, below, initialized]``
* ``counts[tau]`` histogram of buffered inter-communication times, with
  ``tau`` clamped to ``len(table) - 1`` where the hypothetical CDF is 1.
"""
import math

NAME = "python"


def ks_dplus(counts, n_times, table):
    """``max(0, max_tau F_emp(tau) - F_hyp(tau))`` from histogram counts."""
    cum = 0
    best = 0.0
    for tau in range(1, len(table)):
        cum += counts[tau]
        diff = cum / n_times - table[tau]
        if diff > best:
            best = diff
    return best


def scan(xs, start, stop, traj, fstate, istate, counts, table, h, delta, eta, t_min,
         xhat_out, d_out, p_out, gs_out, j_out):
    """Run samples ``start..stop-1``; return the index where learning fired, or -1."""
    x_hat = float(fstate[0])
    p = float(fstate[1])
    j = int(istate[0])
    gap = int(istate[1])
    n_times = int(istate[2])
    below = int(istate[3])
    initialized = int(istate[4])
    u = [float(v) for v in traj]
    n_hat = len(u)
    tbl = [float(v) for v in table]
    top = len(tbl) - 1
    cnt = [int(c) for c in counts]
    xl = xs[start:stop].tolist()
    xo, do, po, go, jo = [], [], [], [], []
    fired = -1
    k = start
    for x in xl:
        j = j + 1 if j < n_hat else 1
        if not initialized:
            initialized = 1
            x_hat = x
            d = math.inf
            gamma = 1
        else:
            pred = x_hat + u[j - 1] + 0.0
            d = abs(x - pred)
            if d < delta:
                x_hat = pred
                gap += 1
                gamma = 0
            else:
                x_hat = x
                tau = gap + 1
                if tau > top:
                    tau = top
                cnt[tau] += 1
                n_times += 1
                gap = 0
                gamma = 1
                dplus = ks_dplus(cnt, n_times, tbl)
                p = math.exp(-2.0 * dplus * dplus * n_times * h / (n_times + h))
        if n_times == 0:
            p = 1.0
        if p < eta:
            below += 1
        else:
            below = 0
        xo.append(x_hat)
        do.append(d)
        po.append(p)
        go.append(gamma)
        jo.append(j)
        if below >= t_min + 1:
            below = 0
            fired = k
            break
        k += 1
    end = start + len(xo)
    xhat_out[start:end] = xo
    d_out[start:end] = do
    p_out[start:end] = po
    gs_out[start:end] = go
    j_out[start:end] = jo
    counts[:] = cnt
    fstate[0] = x_hat
    fstate[1] = p
    istate[0] = j
    istate[1] = gap
    istate[2] = n_times
    istate[3] = below
    istate[4] = initialized
    return fired
