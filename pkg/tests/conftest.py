import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from framerag.backends import Backends, MockBackend
from framerag.core import PipelineConfig
from framerag.manifest import synthetic_frames


@pytest.fixture
def mock_backend() -> MockBackend:
    return MockBackend(seed=7)


@pytest.fixture
def backends(mock_backend) -> Backends:
    return Backends(
        text_embedder=mock_backend,
        frame_embedder=mock_backend,
        generator=mock_backend,
        scorer=mock_backend,
        mocks={"7": mock_backend},
    )


@pytest.fixture
def default_cfg() -> PipelineConfig:
    return PipelineConfig()


@pytest.fixture
def small_cfg() -> PipelineConfig:
    return PipelineConfig(
        n_candidates=24, m_prefilter=12, m_retrieve=6, g_prefilter=4, g_retrieve=2
    )


@pytest.fixture
def frames24():
    return synthetic_frames(24)
