from asymcap.gallager.bounds import mi_perturbation_bounds, entropy_diff_bound, PerturbationBounds
from asymcap.gallager.mapping import RationalApprox, Mapper, approximate, build_mapper, induced_channel, \
    synthetic_channels, chain_rule_terms, as_binary
from asymcap.gallager.transmission import GallagerCode, build_gallager_code, gallager_encode, gallager_decode
