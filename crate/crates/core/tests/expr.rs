use majorant_core::expr::{ExprError, ExprFn};
use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;

struct Counting;

thread_local! {
    static ALLOCS: Cell<usize> = const { Cell::new(0) };
}

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let _ = ALLOCS.try_with(|c| c.set(c.get() + 1));
        System.alloc(layout)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

fn allocations() -> usize {
    ALLOCS.with(|c| c.get())
}

#[test]
fn streaming_evaluation_does_not_allocate() {
    let f = ExprFn::parse("exp(-t)*sin(pi*x)*cos(2*pi*y) + sqrt(1+x^2+y^2)*abs(z-0.5)").unwrap();
    let g = ExprFn::parse("x*(1-x)*y*(1-y)*(t^2+t+1)").unwrap();
    let mut acc = 0.0;
    let before = allocations();
    for i in 0..1_000_000u32 {
        let s = i as f64 * 1e-6;
        let p = [s, 1.0 - s, 0.5 * s];
        acc += f.eval(&p, s).unwrap();
        acc += g.eval_grad(&p[..2], s).unwrap().grad[0];
    }
    assert_eq!(allocations() - before, 0);
    assert!(acc.is_finite());
}

#[test]
fn evaluates_documented_examples() {
    let cases: [(&str, [f64; 3], f64, f64); 6] = [
        (
            "(x^2 - x)*(y^2 - y)*(t^2 + t + 1)",
            [0.5, 0.5, 0.0],
            1.0,
            0.1875,
        ),
        ("sin(pi*x)*exp(-t)", [0.5, 0.0, 0.0], 0.0, 1.0),
        ("2^3^2", [0.0; 3], 0.0, 512.0),
        ("-2^2", [0.0; 3], 0.0, -4.0),
        ("1e-3*x + 2.5E2", [1000.0, 0.0, 0.0], 0.0, 251.0),
        (
            "atan2(y, x) + sqrt(y) + abs(-z)",
            [1.0, 4.0, 2.0],
            0.0,
            4.0 + 4f64.atan(),
        ),
    ];
    for (src, p, t, want) in cases {
        let v = ExprFn::parse(src).unwrap().eval(&p, t).unwrap();
        assert!((v - want).abs() < 1e-12, "{src}: {v} vs {want}");
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let f = ExprFn::parse("sin(2*x*y)*exp(-t) + x^3*sqrt(1+t) - y/(1+x^2)").unwrap();
    let (p, t) = ([0.3, -0.7], 0.4);
    let d = f.eval_grad(&p, t).unwrap();
    let h = 1e-6;
    for k in 0..2 {
        let mut a = p;
        let mut b = p;
        a[k] += h;
        b[k] -= h;
        let fd = (f.eval(&a, t).unwrap() - f.eval(&b, t).unwrap()) / (2.0 * h);
        assert!((fd - d.grad[k]).abs() < 1e-8);
    }
    let fd = (f.eval(&p, t + h).unwrap() - f.eval(&p, t - h).unwrap()) / (2.0 * h);
    assert!((fd - d.grad[3]).abs() < 1e-8);
}

#[test]
fn reports_errors_with_position() {
    match ExprFn::parse("x + log(y)") {
        Err(ExprError::UnknownIdentifier { name, offset }) => {
            assert_eq!(name, "log");
            assert_eq!(offset, 4);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        ExprFn::parse("x +"),
        Err(ExprError::Syntax { .. })
    ));
    assert!(matches!(
        ExprFn::parse("sin(x, y)"),
        Err(ExprError::Arity { .. })
    ));
    assert!(ExprFn::parse("sqrt(x)")
        .unwrap()
        .eval(&[-1.0], 0.0)
        .is_err());
}
