"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import pytest

from faasbench.applications import ApplicationSpec, FunctionSpec, HTTP_SYNC, compute
from faasbench.deployment import DeploymentConfig, PlatformSpec, ServiceBinding, compile as compile_deployment, deploy_all
from faasbench.distributions import constant, parse_duration
from faasbench.simulator import SimEnvironment


def make_platform(pid: str = "p1", peers: dict | None = None, **kwargs) -> PlatformSpec:
    """PlatformSpec with sane test defaults; peers maps name -> ms-or-spec."""
    latency = {pid: constant(0), "loadgen": constant(1)}
    for peer, value in (peers or {}).items():
        latency[peer] = parse_duration(value) if isinstance(value, str) else constant(value)
    defaults = dict(
        cold_start_delay=constant(0),
        keep_alive_us=300_000_000,
        network_latency=latency,
        trigger_delay=constant(100),
    )
    defaults.update(kwargs)
    return PlatformSpec(id=pid, **defaults)


def single_platform_config(app: ApplicationSpec, platform: PlatformSpec) -> DeploymentConfig:
    bindings = {svc: ServiceBinding(platform.id) for svc in app.external_services}
    return DeploymentConfig(
        platforms=(platform,),
        assignment={fn.name: platform.id for fn in app.functions},
        service_bindings=bindings,
    )


def deployed_env(app: ApplicationSpec, cfg: DeploymentConfig, seed: int = 1):
    """Compile, deploy, and return (env, plan, handle) ready to stimulate."""
    env = SimEnvironment(cfg, seed)
    plan = compile_deployment(app, cfg)
    handle = deploy_all(plan, env.adapters(), ids=env.ids)
    env.begin_run(handle.run_id)
    return env, plan, handle


@pytest.fixture
def one_fn_app() -> ApplicationSpec:
    fn = FunctionSpec("solo", HTTP_SYNC, (compute(constant(2)),), entry_point=True)
    return ApplicationSpec(name="solo-app", functions=(fn,))
