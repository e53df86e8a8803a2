"""Freeze reference values computed independently of the Rust code.

Writes crates/core/tests/fixtures/oracles.json. Quantities are evaluated with
numpy (FFT, sliding-window metrics) and mpmath (closed forms at 40 digits).
"""

import json
import random
from pathlib import Path

import mpmath as mp
import numpy as np

mp.mp.dps = 40
OUT = Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/oracles.json"


def img_a(w, h):
    return np.array([[(x * 37 + y * 91 + x * y * 13) % 256 for x in range(w)] for y in range(h)], float)


def img_b(w, h):
    return np.array([[(x * x * 7 + y * 29 + 11) % 256 for x in range(w)] for y in range(h)], float)


def img_c(w, h):
    return np.array(
        [[np.sin(0.7 * x) + np.cos(0.3 * y * x) + (x + 2 * y) % 5 for x in range(w)] for y in range(h)], float
    )


def windows(a, n):
    h, w = a.shape
    return [a[y : y + n, x : x + n] for y in range(h - n + 1) for x in range(w - n + 1)]


def ssim_like(a, b, c1, c2, n=8, skip_degenerate=False):
    vals = []
    for wa, wb in zip(windows(a, n), windows(b, n)):
        ma, mb = wa.mean(), wb.mean()
        va, vb = wa.var(), wb.var()
        cov = ((wa - ma) * (wb - mb)).mean()
        num = (2 * ma * mb + c1) * (2 * cov + c2)
        den = (ma * ma + mb * mb + c1) * (va + vb + c2)
        if skip_degenerate and ((ma * ma + mb * mb + c1) == 0 or (va + vb + c2) == 0):
            continue
        vals.append(num / den)
    return float(np.mean(vals))


def absorption(k, s, d):
    k, s, d = ([mp.mpf(v) for v in t] for t in (k, s, d))
    m2 = sum((k[i] * d[i] / s[i]) ** 2 for i in range(3))
    load = sum(k[i] ** 2 / (1 + k[i] * s[i]) ** 2 for i in range(3))
    rhs = mp.sqrt(2 * mp.pi**3) * (k[0] * s[0] * k[1] * s[1] * k[2] * s[2]) * load * mp.e ** (load / 2)
    return m2**1.5, rhs


def main():
    out = {}

    one = [1.0, 1.0, 1.0]
    _, rhs = absorption(one, one, [0, 0, 0])
    out["absorption_rhs_unit"] = float(rhs)
    out["boundary_mahalanobis_sq_unit"] = float(rhs ** (mp.mpf(2) / 3))
    out["membrane_population_n100"] = float(
        100 * mp.mpf(2) ** 1.5 / mp.pi**1.5 * mp.mpf("0.3") * mp.e ** (-mp.mpf("0.375"))
    )
    out["membrane_force_unit"] = float(1 / (mp.mpf(3) / 4))
    out["psnr_off_by_one"] = float(10 * mp.log10(mp.mpf(255) ** 2))

    rng = random.Random(1575)
    cases = []
    while len(cases) < 40:
        k = [rng.uniform(0.05, 8) for _ in range(3)]
        s = [rng.uniform(0.05, 5) for _ in range(3)]
        d = [rng.uniform(-6, 6) * si for si in s]
        lhs, rhs = absorption(k, s, d)
        if abs(lhs - rhs) < 1e-6 * rhs:
            continue
        cases.append({"k": k, "sigma": s, "delta": d, "lhs": float(lhs), "rhs": float(rhs), "absorbed": bool(lhs < rhs)})
    out["absorption_cases"] = cases

    a, b = img_a(32, 32), img_b(32, 32)
    mse = float(((a - b) ** 2).mean())
    out["quality_pair"] = {
        "width": 32,
        "height": 32,
        "mse": mse,
        "psnr": float(10 * np.log10(255.0**2 / mse)),
        "ssim": ssim_like(a, b, (0.01 * 255) ** 2, (0.03 * 255) ** 2),
        "uqi": ssim_like(a, b, 0.0, 0.0, skip_degenerate=True),
    }

    w, h = 12, 9
    c = img_c(w, h)
    f = np.fft.fftshift(np.fft.fft2(c))
    coeffs = []
    for y in range(h):
        for x in range(w):
            u, v = x - w // 2, y - h // 2
            coeffs.append([u, v, float(f[y, x].real), float(f[y, x].imag)])
    out["dft"] = {
        "width": w,
        "height": h,
        "centered": coeffs,
        "energy_spatial": float((c**2).sum()),
        "energy_spectral_over_n": float((np.abs(f) ** 2).sum() / (w * h)),
    }

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
