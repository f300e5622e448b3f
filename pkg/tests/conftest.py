import pytest

from baitradar.corpus import SyntheticConfig, generate_synthetic, split_dataset
from baitradar.encoders import EncoderConfig
from baitradar.model import BaitRadarModel
from baitradar.training import TrainConfig, prepare_corpus

# one PASS/FAIL line per acceptance criterion, printed after the run
# regardless of output capture; tests opt in via the @criterion decorator
_criterion_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    crit = getattr(getattr(item, "function", None), "_criterion", None)
    if crit is not None and rep.when in ("setup", "call"):
        if rep.failed:
            _criterion_results[crit] = False
        elif rep.when == "call" and rep.passed:
            _criterion_results.setdefault(crit, True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), ok in sorted(_criterion_results.items()):
        terminalreporter.write_line(f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'}")

# small dimensions keep the unit tests quick; the defaults are exercised by
# the acceptance suite
SMALL_ENCODER = EncoderConfig(
    fusion_dim=8, embed_dim=6, conv_channels=(2, 3), conv_kernel=3,
    pool_size=2, thumb_size=16, stats_hidden=6, head_hidden=6,
)


@pytest.fixture(scope="session")
def tiny_records():
    return generate_synthetic(SyntheticConfig(n_records=40, clickbait_ratio=0.5, seed=5))


@pytest.fixture(scope="session")
def tiny_split(tiny_records):
    return split_dataset(tiny_records, seed=5)


@pytest.fixture(scope="session")
def tiny_config():
    return TrainConfig(seed=5, encoder=SMALL_ENCODER, vocab_min_freq=1)


@pytest.fixture(scope="session")
def tiny_prepared(tiny_records, tiny_split, tiny_config):
    return prepare_corpus(tiny_records, tiny_split, tiny_config)


@pytest.fixture(scope="session")
def tiny_model(tiny_prepared):
    return BaitRadarModel.build(
        ("title", "thumbnail", "comments", "audio_transcript", "tags", "statistics"),
        tiny_prepared.vocab, tiny_prepared.stats_norm, SMALL_ENCODER, seed=9,
    )
