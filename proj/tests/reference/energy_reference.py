"""Independent reference for the mask energy, used to freeze the constants in test_losses.cpp.

Run: python3 tests/reference/energy_reference.py
The fixture (5x6 grid, box (1,1,4,3)) is generated by closed-form expressions that the C++
tests reproduce exactly.
"""
import math

import jax
import jax.numpy as jnp

jax.config.update("jax_enable_x64", True)

H, W = 5, 6
BOX = (1, 1, 4, 3)  # x0, y0, x1, y1, half-open
EPS = 1e-5
CLAMP = 1e-12


def lab(i, j):
    return (50.0 + 3.0 * ((i * 7 + j * 3) % 5), 2.0 * ((i + 2 * j) % 3) - 2.0, (i * j) % 4 - 1.5)


def logit(i, j):
    return 2.0 * math.sin(1.3 * i + 0.7 * j + 0.2)


def in_box(i, j):
    x0, y0, x1, y1 = BOX
    return x0 <= j < x1 and y0 <= i < y1


def gt(i, j):
    return in_box(i, j) and (i + j) % 3 != 0


def edges(dilation, theta=2.0):
    out = []
    for i in range(H):
        for j in range(W):
            for dy in (-dilation, 0, dilation):
                for dx in (-dilation, 0, dilation):
                    if (dy, dx) == (0, 0):
                        continue
                    ii, jj = i + dy, j + dx
                    if not (0 <= ii < H and 0 <= jj < W):
                        continue
                    a, b = i * W + j, ii * W + jj
                    if a >= b:
                        continue
                    if not (in_box(i, j) or in_box(ii, jj)):
                        continue
                    d = math.dist(lab(i, j), lab(ii, jj))
                    out.append((a, b, math.exp(-d / theta)))
    return out


def dice(p, q):
    return 1.0 - (2.0 * jnp.sum(p * q) + EPS) / (jnp.sum(p * p) + jnp.sum(q * q) + EPS)


def proj_loss(x):
    p = jax.nn.sigmoid(x).reshape(H, W)
    b = jnp.array([[1.0 if in_box(i, j) else 0.0 for j in range(W)] for i in range(H)])
    return dice(p.max(axis=0), b.max(axis=0)) + dice(p.max(axis=1), b.max(axis=1))


def neglog(v):
    return -jnp.log(jnp.maximum(v, CLAMP))


def pair_boxonly(x, es, tau):
    p = jax.nn.sigmoid(x)
    terms = [neglog(p[a] * p[b] + (1 - p[a]) * (1 - p[b])) for a, b, s in es if s >= tau]
    return sum(terms) / len(terms) if terms else 0.0


def pair_supervised(x, es):
    p = jax.nn.sigmoid(x)
    g = [gt(k // W, k % W) for k in range(H * W)]
    terms = []
    for a, b, _ in es:
        same = p[a] * p[b] + (1 - p[a]) * (1 - p[b])
        terms.append(neglog(same if g[a] == g[b] else 1.0 - same))
    return sum(terms) / len(terms)


def main():
    x = jnp.array([logit(i, j) for i in range(H) for j in range(W)])
    print(f"proj {float(proj_loss(x)):.15g}")
    gp = jax.grad(proj_loss)(x)
    print("proj grad nonzero:", [(int(k), f"{float(gp[k]):.15g}") for k in range(H * W) if gp[k] != 0])
    for d in (1, 2):
        es = edges(d)
        n_conf = sum(1 for e in es if e[2] >= 0.1)
        print(f"d={d}: |E_in|={len(es)} confident(0.1)={n_conf}")
        print(f"  boxonly {float(pair_boxonly(x, es, 0.1)):.15g}")
        print(f"  supervised {float(pair_supervised(x, es)):.15g}")
        gb = jax.grad(lambda v: pair_boxonly(v, es, 0.1))(x)
        gs = jax.grad(lambda v: pair_supervised(v, es))(x)
        for k in (7, 8, 14, 21):
            print(f"  grad[{k}] boxonly {float(gb[k]):.15g} supervised {float(gs[k]):.15g}")


if __name__ == "__main__":
    main()
