use ::inls::inls;
use pyo3::prelude::*;

fn run(code: &std::ffi::CStr) -> PyResult<()> {
    Python::attach(|py| py.run(code, None, None))
}

fn init() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| {
        pyo3::append_to_inittab!(inls);
        Python::initialize();
    });
}

#[test]
fn module_exposes_core_types() {
    init();
    run(c"
import inls
g = inls.Grid(20.0, 256)
assert g.point_count == 256
u = inls.State.initial(g).scale_to_h1(0.5)
m = inls.Model(1.0, 0.5, k='K1_pure')
t = inls.evolve(u, m, 0.01, 0.5, stride=10, enforce_odd=True)
assert len(t) == 6
assert abs(t.mass[-1] - t.mass[0]) < 1e-12 * t.mass[0]
assert t.final_state().even_part() < 1e-12
")
    .unwrap();
}

#[test]
fn invalid_parameters_raise_value_error() {
    init();
    run(c"
import inls
for bad in (lambda: inls.Grid(20.0, 100), lambda: inls.Model(1.0, 1.5), lambda: inls.Potential.yukawa(2.0, 1.0)):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError('accepted invalid input')
")
    .unwrap();
}
