"""Smoke test for the lookahead_bo extension module.

Build and install first, e.g. `maturin develop --release` from the repository
root, then run `python python/smoke_test.py`.
"""

import json
import math

import lookahead_bo as lb


def quadratic_a(x, t):
    return -4 * (x - 0.5) ** 2 + math.sin(math.pi * (x + t)) + math.cos(math.pi * (x + t))


def main():
    times = [0.1 * k for k in range(8)]
    xs = [[(0.37 * k) % 1.0] for k in range(8)]
    ys = [quadratic_a(x[0], t) for x, t in zip(xs, times)]

    gp = lb.GaussianProcess(times, xs, ys, theta_x=0.3, theta_t=1.0, noise_variance=1e-3)
    mean, var = gp.posterior([0.5], 0.75)
    assert math.isfinite(mean) and var > 0.0
    grown = gp.condition([0.5], 0.8, quadratic_a(0.5, 0.8))
    assert len(grown) == len(gp) + 1
    assert grown.posterior([0.5], 0.8)[1] < gp.posterior([0.5], 0.8)[1]

    fitted = lb.GaussianProcess.fit(times, xs, ys, seed=1)
    assert fitted.hyperparameters()["theta_x"] > 0.0

    value, stderr = lb.two_step_acquisition(gp, [0.4], 0.8, 1.5, mc_samples=16, seed=3)
    again, _ = lb.two_step_acquisition(gp, [0.4], 0.8, 1.5, mc_samples=16, seed=3)
    assert value == again and stderr >= 0.0
    kg = lb.knowledge_gradient(gp, [0.4], 0.8, 1.5, mc_samples=16, seed=3)
    assert kg > -1e-6
    x_next, _ = lb.maximize_two_step(gp, 0.8, 1.5, mc_samples=8, seed=3)
    assert 0.0 <= x_next[0] <= 1.0

    session = lb.Session("r2LEY", horizon=1.5, decisions=3, times=times, xs=xs, ys=ys, mc_samples=8, seed=5)
    while not session.is_complete():
        x, t = session.ask()
        restored = lb.Session.from_json(session.to_json())
        session.tell(quadratic_a(x[0], t))
        restored.tell(quadratic_a(x[0], t))
        assert restored.trace_json() == session.trace_json()
    x_final, y_final = session.final_decision()
    print(f"session final decision x={x_final[0]:.4f} y={y_final:.4f}")

    assert lb.true_value("quadratic-a", [0.5], 0.0) == 1.0
    try:
        lb.true_value("quadratic-a", [2.0], 0.0)
    except lb.LookaheadError:
        pass
    else:
        raise AssertionError("out-of-domain query accepted")

    config = """
schema_version = 1
oracle = "quadratic-b"
strategies = ["EI", "mumax"]
budget = 9
n_start = 6
t_start = 1.0
horizon = 4.0
"""
    summary = json.loads(lb.run_experiment(config))
    assert [s["strategy"] for s in summary["strategies"]] == ["EI", "mumax"]
    print("smoke test passed")


if __name__ == "__main__":
    main()
