"""Exercise the Python bindings end to end on the bundled images."""

import math
import random
import sys
import tempfile
from pathlib import Path

import freqcrystal_py as fc

ASSETS = Path(__file__).resolve().parent.parent / "crates/core/assets"


def check(cond, what):
    if not cond:
        print(f"FAIL {what}")
        sys.exit(1)
    print(f"ok   {what}")


def main():
    camera = fc.Image.load(str(ASSETS / "camera128.pgm"))
    check((camera.width, camera.height, camera.channels) == (128, 128, ["gray"]), "load gray image")

    spec = fc.Spectrum.forward(camera)
    check(spec.is_conjugate_symmetric(), "spectrum of a real image is conjugate symmetric")
    back = spec.inverse()
    check(max(abs(a - b) for a, b in zip(back, camera.plane(0))) < 1e-9, "spectrum round trip")
    check(abs(spec.at(0, 0).real - sum(camera.plane(0))) < 1e-6, "DC equals pixel sum")

    check(fc.wrapped_delta(-3, 3, 8) == 2, "wrapped delta")
    check(fc.pole_of(3, 3, 8, 8) == "infinity", "pole of (3,3) on 8x8")
    check(abs(fc.absorption_threshold([1, 1, 1], [1, 1, 1]) - 8.59333) < 1e-5, "absorption threshold")
    check(fc.absorbs([1, 1, 1], [1, 1, 1], [1, 1, 1]) and not fc.absorbs([1, 1, 1], [1, 1, 1], [1.5] * 3), "absorption")
    check(abs(fc.membrane_force([1, 1, 1], [1, 1, 1]) - 4 / 3) < 1e-12, "membrane force")

    cl = fc.crystallize(camera)
    check(len(cl) > 1, f"crystallize: {len(cl)} clusters, {cl.iterations} iterations, converged={cl.converged}")
    check(sum(c["n"] for c in cl.clusters) + cl.unassigned == 128 * 128, "clusters partition the plane")
    check(cl.render_png().startswith(b"\x89PNG"), "render crystal image")

    rng = random.Random(0)
    pts = [tuple(rng.gauss(m, 1) for _ in range(3)) for m in (0, 12) for _ in range(200)]
    blobs = fc.fit_points(pts, [100, 100, 100])
    check(sorted(c["n"] for c in blobs.clusters) == [200, 200], "euclidean fit separates two blobs")

    cfg = fc.Config('{"mask_radius": 60}')
    check(fc.Config(cfg.to_json()).mask_radius == 60, "config round trip")
    data, reports = fc.sparsify(camera, cfg)
    rec = fc.reconstruct(data)
    q = fc.compare(camera, rec.quantized())
    check(q["psnr"] > 40 and reports[0][1]["total_cells"] == 128 * 128, f"sparsify/reconstruct psnr {q['psnr']:.2f}")
    check(math.isinf(fc.compare(camera, camera)["psnr"]), "identical images give inf psnr")

    noisy = fc.corrupt(camera, peak=30, read_sigma=5, seed=2024).quantized()
    clean, rep = fc.denoise(noisy, reference=camera)
    ch = rep["channels"][0]
    check(ch["psnr_after"] > ch["psnr_before"], f"denoise {ch['psnr_before']:.2f} -> {ch['psnr_after']:.2f} dB")

    cover = fc.Image.load(str(ASSETS / "coffee128.ppm"))
    secret = fc.Image.load(str(ASSETS / "astronaut128.ppm"))
    key = fc.StegoKey.crystallize(cover)
    stego = fc.embed(key, secret)
    key2 = fc.StegoKey.from_bytes(key.to_bytes())
    exact = fc.extract(stego, key2)
    check(max(abs(a - b) for a, b in zip(exact.plane(1), secret.plane(1))) < 1e-6, "exact extraction")
    keyed = fc.ssim(secret, fc.extract(stego.quantized(), key).quantized(), 1)
    attack = fc.ssim(secret, fc.intercept(stego.quantized(), cover).quantized(), 1)
    check(keyed > attack, f"keyed ssim {keyed:.3f} beats interception {attack:.3f}")

    with tempfile.TemporaryDirectory() as d:
        path = str(Path(d) / "s.ppm")
        stego.quantized().save(path)
        check(fc.Image.load(path) == stego.quantized(), "save and reload")

    try:
        fc.StegoKey.from_bytes(b"nope")
        check(False, "bad key rejected")
    except fc.FreqCrystalError as e:
        check(isinstance(e.args[1], int), f"bad key rejected with code {e.args[1]}")

    print("smoke test passed")


if __name__ == "__main__":
    main()
