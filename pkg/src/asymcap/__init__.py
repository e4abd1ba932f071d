from .helpers import *
from .dmc import Dmc, InputDist, InfoReport, capacity, mutual_information, conditional_entropy, symmetric_capacity, \
    parse_channel
