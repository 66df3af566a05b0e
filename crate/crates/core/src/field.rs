use std::sync::Arc;

use crate::geometry::Point;

pub trait VectorField: Send + Sync {
    fn eval(&self, p: Point) -> Point;
}

pub trait ScalarField: Send + Sync {
    fn eval(&self, p: Point) -> f64;
}

impl<F: Fn(Point) -> Point + Send + Sync> VectorField for F {
    fn eval(&self, p: Point) -> Point {
        self(p)
    }
}

impl<F: Fn(Point) -> f64 + Send + Sync> ScalarField for F {
    fn eval(&self, p: Point) -> f64 {
        self(p)
    }
}

pub type VField = Arc<dyn VectorField>;
pub type SField = Arc<dyn ScalarField>;

pub fn zero_vector() -> VField {
    Arc::new(|_: Point| [0.0, 0.0])
}

/// a f + b g, pointwise.
pub fn combine_vector(a: f64, f: &VField, b: f64, g: &VField) -> VField {
    let (f, g) = (f.clone(), g.clone());
    Arc::new(move |p: Point| {
        let (u, v) = (f.eval(p), g.eval(p));
        [a * u[0] + b * v[0], a * u[1] + b * v[1]]
    })
}

pub fn combine_scalar(a: f64, f: &SField, b: f64, g: &SField) -> SField {
    let (f, g) = (f.clone(), g.clone());
    Arc::new(move |p: Point| a * f.eval(p) + b * g.eval(p))
}
