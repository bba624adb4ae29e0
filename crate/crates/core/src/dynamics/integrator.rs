use crate::C64;

/// Classical fourth-order Runge–Kutta with reusable workspace.
#[derive(Clone, Debug)]
pub struct Rk4 {
    stage: Vec<C64>,
    probe: Vec<C64>,
    acc: Vec<C64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self { stage: vec![zero; len], probe: vec![zero; len], acc: vec![zero; len] }
    }

    /// Advance `y` by `h`. `f(offset, y, out)` writes the derivative at the step
    /// start plus `offset ∈ {0, h/2, h}`.
    pub fn step<F>(&mut self, y: &mut [C64], h: f64, mut f: F)
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let half = 0.5 * h;
        f(0.0, y, &mut self.stage);
        self.acc.copy_from_slice(&self.stage);
        axpy_into(&mut self.probe, y, half, &self.stage);

        f(half, &self.probe, &mut self.stage);
        accumulate(&mut self.acc, 2.0, &self.stage);
        axpy_into(&mut self.probe, y, half, &self.stage);

        f(half, &self.probe, &mut self.stage);
        accumulate(&mut self.acc, 2.0, &self.stage);
        axpy_into(&mut self.probe, y, h, &self.stage);

        f(h, &self.probe, &mut self.stage);
        accumulate(&mut self.acc, 1.0, &self.stage);
        accumulate(y, h / 6.0, &self.acc);
    }
}

/// `out = y + a·x`
fn axpy_into(out: &mut [C64], y: &[C64], a: f64, x: &[C64]) {
    for ((o, yi), xi) in out.iter_mut().zip(y).zip(x) {
        *o = yi + xi * a;
    }
}

/// `y += a·x`
fn accumulate(y: &mut [C64], a: f64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi * a;
    }
}
