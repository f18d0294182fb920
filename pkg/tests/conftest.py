import os

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from kundtkit import expr as ex

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

VARS = ("x", "y", "z")


def expressions(max_leaves: int = 12, safe: bool = True):
    """Random expressions over x, y, z.

    With ``safe`` the only functions used are total on the reals and the only
    denominators are bounded away from zero, so evaluation never fails.
    """
    leaf = st.one_of(
        st.sampled_from([ex.Var(v) for v in VARS]),
        st.integers(-5, 5).map(ex.Num),
        st.fractions(min_value=-3, max_value=3, max_denominator=5).map(ex.Num),
    )

    def extend(children):
        unary = st.one_of(
            children.map(ex.Neg),
            children.map(lambda a: ex.Func("sin", a)),
            children.map(lambda a: ex.Func("cos", a)),
            children.map(lambda a: ex.Func("exp", ex.Func("sin", a))),
            st.tuples(children, st.integers(0, 3)).map(lambda t: ex.Pow(*t)),
        )
        binary = st.tuples(children, children)
        ops = st.one_of(
            binary.map(lambda t: ex.Add(*t)),
            binary.map(lambda t: ex.Sub(*t)),
            binary.map(lambda t: ex.Mul(*t)),
            # 2 + sin(b) stays in [1, 3]
            binary.map(lambda t: ex.Div(t[0], ex.Add(ex.Num(2), ex.Func("sin", t[1])))),
        )
        return st.one_of(unary, ops)

    return st.recursive(leaf, extend, max_leaves=max_leaves)


points = st.fixed_dictionaries({v: st.floats(-1.5, 1.5) for v in VARS})
