"""Smoke test for the qec_chi extension module."""

import json
import math

import qec_chi


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    rz = qec_chi.ChannelModel("rz", 0.01)
    chi = rz.chi()
    assert close(chi[0, 3].imag, math.sin(0.01), 1e-12), chi[0, 3]
    assert close(sum(chi.diagonal()), 2.0)

    # JSON round trip
    again = qec_chi.ChiMatrix.from_json(chi.to_json())
    assert again.entries() == chi.entries()
    assert set(json.loads(chi.to_json())) == {"re", "im"}

    # physical metrics
    report = qec_chi.metric_report(chi)
    assert close(report["diamond"], math.sin(0.005), 1e-8), report
    r, _ = qec_chi.avg_error_rate(chi)
    assert close(r, 2.0 / 3.0 * math.sin(0.005) ** 2, 1e-9)

    # twirling keeps the average error rate
    assert close(qec_chi.avg_error_rate(chi.twirl())[0], r, 1e-12)

    # approximations
    adc = qec_chi.ChannelModel("adc", 0.01).chi()
    pcw = qec_chi.approximate(adc, "pcw")
    pca = qec_chi.approximate(adc, "pca")
    assert pcw.honest and pcw.honesty_margin >= -1e-8
    assert not pca.honest
    assert close(sum(pcw.weights), 1.0)

    # logical level: the frame route agrees with the density-matrix simulation
    steane = qec_chi.CodeSpec("steane7")
    assert steane.n_qubits == 7
    model = qec_chi.ChannelModel("rh", 0.2)
    frame = steane.logical_chi(model.chi())
    sim, leakage = steane.simulate(model)
    assert leakage < 1e-10
    for a, b in zip(frame.entries(), sim.entries()):
        for x, y in zip(a, b):
            assert abs(x - y) < 1e-11

    # leading-order fit of the logical error rate of RZ: degree 4
    xs = [1e-4 * 10 ** (k / 3) for k in range(7)]
    ys = [qec_chi.avg_error_rate(steane.logical_chi(rz.at(x).chi()))[0] for x in xs]
    degree, coeff, rv = qec_chi.fit_leading_order(xs, ys)
    assert degree == 4 and rv < 1e-7, (degree, coeff, rv)

    # bit-flip code pseudo-threshold
    t = qec_chi.threshold(qec_chi.ChannelModel("flip"), qec_chi.CodeSpec("bitflip3"), domain=(1e-4, 0.9))
    assert abs(t - 0.5) < 1e-6, t

    # errors surface as ValueError
    for bad in (lambda: qec_chi.ChannelModel("bogus"), lambda: qec_chi.CodeSpec("shor9"),
                lambda: qec_chi.ChannelModel("adc", 2.0)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
