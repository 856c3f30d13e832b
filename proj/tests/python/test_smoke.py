import numpy as np
import pytest

import lpq


def test_codebook_range():
    values = [v for _, v in lpq.codebook("fp6")]
    assert len(values) == 64
    assert max(values) == 28.0 and min(values) == -28.0
    assert max(v for _, v in lpq.codebook("fp5")) == 24.0


def test_encode_decode():
    assert lpq.encode_rtn("fp6", 28.0) == 0b011111
    assert lpq.decode("fp6", 0b010000) == 2.0
    assert lpq.decode("fp6", lpq.encode_rtn("fp6", 0.09375)) == 0.125


def test_pack_round_trip():
    codes = [0b011111, 0b001100, 0, 0b100001, 5]
    seg4, tail = lpq.pack("fp6", codes)
    assert len(seg4) == 4 and len(tail) == 4
    assert lpq.unpack("fp6", seg4, tail, len(codes)) == codes


def test_bias_shift_matches_naive():
    scale = 0x3800  # 0.5
    folded = lpq.fold_scale("fp6", scale)
    for code in range(64):
        assert lpq.dequant_naive("fp6", code, scale) == lpq.dequant_bias_shift("fp6", code, folded)


def test_quantize_dequantize_and_container():
    rng = np.random.default_rng(0)
    w = rng.normal(0, 0.02, size=(16, 300))
    mses = []
    for fmt in ("fp6", "fp5", "int4"):
        q = lpq.quantize(w, fmt, "fgq", 128)
        assert q.block_count == 16 * 3
        back = lpq.dequantize(q)
        assert back.shape == w.shape
        mses.append(lpq.error_report(w, back)["mse"])
        assert lpq.QuantizedTensor.from_bytes(q.to_bytes()) == q
    assert mses[0] < min(mses[1], mses[2])


def test_gemm_against_reference():
    rng = np.random.default_rng(1)
    w = rng.normal(0, 0.05, size=(32, 64))
    x = rng.uniform(-1, 1, size=(64, 8)).astype(np.float32)
    q = lpq.quantize(w, "fp6", bias_shift=True)
    y = lpq.gemm(q, x)
    assert np.array_equal(y, lpq.gemm(q, x, "bias-shift", 2))
    ref = lpq.gemm_reference(lpq.dequantize(q), x.astype(np.float64))
    assert np.max(np.abs(y - ref)) <= 4 * np.finfo(np.float32).eps * 64 * np.abs(w).max() * 1.01


def test_errors_surface_as_exceptions():
    with pytest.raises(lpq.LpqError, match="PathUnavailable"):
        lpq.dequantize(lpq.quantize(np.ones((2, 2))), "bias-shift")
    with pytest.raises(ValueError):
        lpq.quantize(np.array([[np.nan]]))
