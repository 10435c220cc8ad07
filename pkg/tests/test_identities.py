import pytest

from kravchuk import identities as I

SUITE = I.run_identity_suite()


def test_suite_size_and_names_unique():
    names = [c.name for c in SUITE]
    assert len(names) >= 40
    assert len(set(names)) == len(names)


@pytest.mark.parametrize("check", SUITE, ids=lambda c: c.name)
def test_identity(check):
    assert check.passed, f"{check.name}: {check.value:.3e} > {check.threshold:g}"


def test_rng_is_seeded():
    assert I.rng().integers(1 << 30) == I.rng().integers(1 << 30)
    assert I.SEED == 0x5EED


def test_sturm_liouville_sign():
    # the eigenvalue of the self-adjoint difference form is -2n, not +2n
    assert I.sturm_liouville_residual(16) <= 1e-10
    assert I.sturm_liouville_residual(16, sign=+1) > 1.0


def test_identity_check_threshold_inclusive():
    assert I.IdentityCheck("x", 1e-10, 1e-10).passed
    assert not I.IdentityCheck("x", 2e-10, 1e-10).passed
