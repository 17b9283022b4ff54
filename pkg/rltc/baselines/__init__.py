from rltc.baselines.arithmetic import EncodedBits, ac_decode, ac_encode
from rltc.baselines.bitio import BitReader, BitWriter, CorruptBitstream
from rltc.baselines.container import BaselineCodec, baseline_compress, baseline_decompress
from rltc.baselines.entropy import NotADistribution, entropy
from rltc.baselines.frequency import FrequencyModel
from rltc.baselines.lz77 import DanglingOffset, Lz77Token, lz77_reconstruct, lz77_tokenize
from rltc.baselines.range_coder import range_decode, range_encode

__all__ = [
    "BaselineCodec",
    "BitReader",
    "BitWriter",
    "CorruptBitstream",
    "DanglingOffset",
    "EncodedBits",
    "FrequencyModel",
    "Lz77Token",
    "NotADistribution",
    "ac_decode",
    "ac_encode",
    "baseline_compress",
    "baseline_decompress",
    "entropy",
    "lz77_reconstruct",
    "lz77_tokenize",
    "range_decode",
    "range_encode",
]
