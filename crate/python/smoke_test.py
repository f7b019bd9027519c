"""Smoke test for the `dilemma` extension module.

Build and install it first, e.g. `pip install --no-build-isolation ./crates/py`
or `maturin develop -m crates/py/Cargo.toml --release`.
"""

import math

import dilemma


def close(a, b, tol=1e-9):
    return all(math.isclose(x, y, abs_tol=tol) for x, y in zip(a, b))


def main():
    game = dilemma.Game(0.9)
    assert (game.r, game.s, game.t, game.p) == (4.0, 0.0, 6.0, 1.0)

    wsls = dilemma.Strategy("WSLS")
    assert wsls.probs == [1.0, 0.0, 0.0, 1.0]
    assert dilemma.Strategy("1001") == wsls
    assert dilemma.Strategy("TFT").swap_perspective().probs == [1.0, 1.0, 0.0, 0.0]

    br = dilemma.best_response(game, wsls)
    assert br.label == "WSLS" and br.bits == "1001"
    assert close(br.q, [40, 33.3, 33.3, 40, 39.3, 37, 37, 39.3])
    assert br.tie_states == []

    vi = dilemma.value_iteration(game, wsls, tol=1e-10)
    assert close(vi, br.q, tol=1e-9)
    assert close(dilemma.policy_evaluation(game, "WSLS", wsls), dilemma.case_q(game, 7))

    low = dilemma.Game(0.2)
    assert dilemma.best_response(low, dilemma.Strategy("GRIM")).label == "All-D"
    assert dilemma.symmetric_equilibria(game) == ["WSLS", "Grim", "All-D"]
    consistent, _, condition = dilemma.case_consistent(game, 8)
    assert consistent and "gamma" in condition

    onsets = dict((name, (lo, hi)) for name, lo, hi in dilemma.equilibrium_onsets([0.1 * k for k in range(1, 10)]))
    assert onsets["Grim"][0] <= 0.4 <= onsets["Grim"][1]
    assert onsets["WSLS"][0] <= 2 / 3 <= onsets["WSLS"][1]

    run = dilemma.learn(low, "WSLS", realizations=20, steps=20_000, sample_every=1000, seed=1)
    assert run.learned == "All-D"
    assert len(run.times) == len(run.mean_q) == 21
    assert sum(run.tally.values()) == 20
    assert len(dilemma.Q_LABELS) == 8

    try:
        dilemma.Game(0.5, r=3, s=0, t=6, p=1)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid payoffs accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
