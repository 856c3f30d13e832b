"""FP6/FP5/INT4 weight quantization: codecs, packing, dequantization, GEMM."""

try:
    from . import _lpq
except ImportError:  # in-tree build: extension sits next to the build outputs
    import _lpq

globals().update({k: v for k, v in vars(_lpq).items() if not k.startswith("__")})
