from asymcap.polar.construction import PolarContext, build_context, bec_bhattacharyya
from asymcap.polar.honda_yamamoto import hy_encode, hy_decode, syndrome_decode, source_compress, source_decompress
from asymcap.polar.successive_cancellation import BitDistribution, sc_bit_distribution
from asymcap.polar.transform import polar_transform
