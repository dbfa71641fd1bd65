from .apparatus import (InTrapApparatus, DelayedDropApparatus,
                        field_per_intensity)
from .positioners import WavePlateStage, RfPowerOffset, BiasField
from .detector import DifferentialRamsey
