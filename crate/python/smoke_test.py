"""Smoke test for the nptorus_py extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/nptorus_py-*.whl
"""

import math

import nptorus_py as np_torus


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    shape = np_torus.TorusShape(0.5)
    assert close(shape.minor_radius / shape.major_radius, 0.5, 1e-15)
    assert close(shape.psi(0.0), 0.5, 1e-15)

    s, err = np_torus.s_kl(shape, 0, 0)
    assert close(s, 26.5347679971839, 1e-9) and err < 1e-7, (s, err)

    rec = np_torus.numerical_range(shape, 0, 1, method="all")
    assert rec["sign_verdict"] == "negative"
    assert abs(rec["i_direct"] - rec["i_spectral"]) < 1e-6
    assert abs(rec["i_polar"] - rec["i_spectral"]) < 1e-6

    assert close(np_torus.lead_i_k0(1), 2 * math.sqrt(2) * math.pi, 1e-15)
    assert np_torus.lead_i_l(shape, 1) < 0

    sp = np_torus.mode_spectrum(shape, 0, 16)
    assert len(sp.lambda_np) == 33
    assert abs(sp.lambda_np[0] - 0.5) < 1e-8 and sp.contained()
    counts = sp.counts()
    assert counts["positive"] + counts["negative"] == 33

    certs = np_torus.certify_signs(shape, 16, 16, ks=[0, 3])
    assert certs["positive_axis"]["threshold"] is not None
    assert all(c["threshold"] is not None for c in certs["negative_axis"])

    try:
        np_torus.TorusShape(1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("xi = 1.5 accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
