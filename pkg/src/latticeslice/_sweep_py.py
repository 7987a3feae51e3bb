"""Pure-Python version of the compiled box sweep (same algorithm, same results)."""


def sweep(xs, lo_idx, hi_idx, x_anchor, side, m):
    size = 1
    while size < m:
        size *= 2
    mx = [0] * (2 * size)
    lz = [0] * (2 * size)

    def add(node, lo, hi, a, b, val):
        if b < lo or hi < a:
            return
        if a <= lo and hi <= b:
            mx[node] += val
            lz[node] += val
            return
        mid = (lo + hi) >> 1
        add(2 * node, lo, mid, a, b, val)
        add(2 * node + 1, mid + 1, hi, a, b, val)
        left, right = mx[2 * node], mx[2 * node + 1]
        mx[node] = (left if left >= right else right) + lz[node]

    def argmax():
        node, lo, hi = 1, 0, m - 1
        while lo < hi:
            mid = (lo + hi) >> 1
            if mx[2 * node] >= mx[2 * node + 1]:
                node, hi = 2 * node, mid
            else:
                node, lo = 2 * node + 1, mid + 1
        return lo

    xs = list(xs)
    lo_idx = list(lo_idx)
    hi_idx = list(hi_idx)
    npts = len(xs)
    best, best_ax, best_ay = -1, 0, 0
    add_p = rem_p = 0
    for i, x0 in enumerate(x_anchor):
        x1 = x0 + side
        while add_p < npts and xs[add_p] < x1:
            add(1, 0, m - 1, lo_idx[add_p], hi_idx[add_p], 1)
            add_p += 1
        while rem_p < add_p and xs[rem_p] < x0:
            add(1, 0, m - 1, lo_idx[rem_p], hi_idx[rem_p], -1)
            rem_p += 1
        if mx[1] > best:
            best, best_ax, best_ay = mx[1], i, argmax()
    return best, best_ax, best_ay
