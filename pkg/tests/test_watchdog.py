import pytest

from sitewise.actions import Calculate, Click, GoTo, TakeNote, Type
from sitewise.env import (
    EnvTimeout,
    FaultPlan,
    MockSite,
    Unrecoverable,
    Watchdog,
    spec_from_dict,
)
from test_env import shop_doc


SCRIPT = [
    Type("2", "mug"),
    Click("3"),
    TakeNote("searching for mugs"),
    Click("11"),
    Calculate("2*3"),
    Click("10"),
]


def fresh_site():
    return MockSite(spec_from_dict(shop_doc()))


def run_plain(script):
    site = fresh_site()
    s = site.open()
    for i, a in enumerate(script):
        s.step(a)
    final_obs = s.observe(step=len(script))
    return dict(site.state_vars), s.current_url, final_obs.ax_tree


def run_watched(script, fail_calls, exc_type=None):
    site = fresh_site()
    kw = {"exc_type": exc_type} if exc_type else {}
    plan = FaultPlan(fail_calls=fail_calls, **kw)
    wd = Watchdog(lambda: plan.wrap(site.open()))
    for i, a in enumerate(script):
        wd.step(a)
    final_obs = wd.observe(step=len(script))
    return dict(site.state_vars), wd.current_url, final_obs.ax_tree, wd, plan


class TestWatchdog:
    def test_no_faults_is_pure_passthrough(self):
        baseline = run_plain(SCRIPT)
        state, url, tree, wd, plan = run_watched(SCRIPT, fail_calls=())
        assert (state, url, tree) == baseline
        assert wd.recoveries == 0
        assert plan.injected == 0

    def test_single_transient_fault_restores_identical_state(self):
        baseline = run_plain(SCRIPT)
        # call 4 is the Click("11") dispatch; it faults once before reaching the site
        state, url, tree, wd, plan = run_watched(SCRIPT, fail_calls={4})
        assert (state, url, tree) == baseline
        assert wd.recoveries == 1
        assert plan.injected == 1

    def test_timeout_is_recoverable_too(self):
        baseline = run_plain(SCRIPT)
        state, url, tree, wd, _ = run_watched(SCRIPT, fail_calls={2}, exc_type=EnvTimeout)
        assert (state, url, tree) == baseline
        assert wd.recoveries == 1

    def test_fault_on_observe_recovers(self):
        site = fresh_site()
        plan = FaultPlan(fail_calls={1})
        wd = Watchdog(lambda: plan.wrap(site.open()))
        obs = wd.observe(step=0)
        assert obs.url == "http://shop.mock/"
        assert wd.recoveries == 1

    def test_notes_ledger_replayed_into_fresh_session(self):
        _, _, _, wd, _ = run_watched(SCRIPT, fail_calls={6})
        # the wrapped live session is a FaultInjector; the mock sits inside
        assert "searching for mugs" in wd.session.inner.notes

    def test_exhaustion_aborts(self):
        with pytest.raises(Unrecoverable):
            run_watched(SCRIPT, fail_calls=set(range(3, 60)))

    def test_two_faults_then_success_is_fine(self):
        baseline = run_plain(SCRIPT)
        # two consecutive faults on the same logical step stay within r=2
        state, url, tree, wd, _ = run_watched(SCRIPT, fail_calls={4, 5, 6})
        assert wd.recoveries >= 2
        assert (state, url, tree) == baseline

    def test_counter_resets_between_spread_faults(self):
        baseline = run_plain(SCRIPT)
        state, url, tree, wd, _ = run_watched(SCRIPT, fail_calls={2, 9})
        assert (state, url, tree) == baseline
        assert wd.recoveries == 2

    def test_retries_zero_gives_up_immediately(self):
        site = fresh_site()
        plan = FaultPlan(fail_calls={1})
        wd = Watchdog(lambda: plan.wrap(site.open()), retries=0)
        with pytest.raises(Unrecoverable):
            wd.observe(step=0)
