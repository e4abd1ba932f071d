import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Any

from scipy.stats import binomtest

from asymcap.helpers import REPORT_SCHEMA_VERSION

CONFIDENCE_LEVEL = 0.95


def bler_interval(errors: int, trials: int, confidence_level: float = CONFIDENCE_LEVEL) -> Tuple[float, float]:
    """Clopper-Pearson interval of the block error rate."""
    if trials <= 0:
        raise ValueError(f'Trials must be positive, got {trials}')
    interval = binomtest(int(errors), int(trials)).proportion_ci(confidence_level=confidence_level, method='exact')
    return float(interval.low), float(interval.high)


@dataclass
class ExperimentReport:
    approach: str
    channel: str
    blocklen: int
    trials: int
    block_errors: int
    message_length: int
    channel_uses: int
    capacity: float
    error_counts: Dict[str, int] = field(default_factory=dict)
    ones_fraction: Optional[float] = None
    config: Dict[str, Any] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)
    runtime: float = 0.0
    schema_version: int = REPORT_SCHEMA_VERSION

    @property
    def realized_rate(self) -> float:
        return self.message_length / self.channel_uses

    @property
    def gap(self) -> float:
        return self.capacity - self.realized_rate

    @property
    def bler(self) -> float:
        return self.block_errors / self.trials

    def body(self) -> dict:
        """Everything but the runtime; equal for two runs of the same spec."""
        low, high = bler_interval(self.block_errors, self.trials)
        return {
            'schema_version': self.schema_version,
            'approach': self.approach,
            'channel': self.channel,
            'blocklen': self.blocklen,
            'trials': self.trials,
            'message_length': self.message_length,
            'channel_uses': self.channel_uses,
            'realized_rate': self.realized_rate,
            'capacity': self.capacity,
            'gap': self.gap,
            'block_errors': self.block_errors,
            'bler': self.bler,
            'bler_interval': [low, high],
            'error_counts': dict(sorted(self.error_counts.items())),
            'ones_fraction': self.ones_fraction,
            'extra': self.extra,
            'config': self.config,
        }

    def to_dict(self) -> dict:
        data = self.body()
        data['runtime'] = self.runtime
        return data

    def to_json_string(self, include_runtime: bool = True) -> str:
        data = self.to_dict() if include_runtime else self.body()
        return json.dumps(data, indent=4, sort_keys=True)

    def to_json(self, filepath: Path):
        """Write the experiment report to a JSON file."""
        with filepath.open('w') as f:
            f.write(self.to_json_string())

    @staticmethod
    def from_dict(data: dict) -> 'ExperimentReport':
        if data.get('schema_version') != REPORT_SCHEMA_VERSION:
            raise ValueError(f'Unsupported report schema version {data.get("schema_version")}')
        return ExperimentReport(
            approach=data['approach'],
            channel=data['channel'],
            blocklen=data['blocklen'],
            trials=data['trials'],
            block_errors=data['block_errors'],
            message_length=data['message_length'],
            channel_uses=data['channel_uses'],
            capacity=data['capacity'],
            error_counts=data.get('error_counts', {}),
            ones_fraction=data.get('ones_fraction'),
            config=data.get('config', {}),
            extra=data.get('extra', {}),
            runtime=data.get('runtime', 0.0),
        )
