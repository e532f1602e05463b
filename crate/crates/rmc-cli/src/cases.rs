//! Benchmark case definitions: eight standard synthetic configurations at
//! full scale, plus "-scaled" variants with both dimensions divided by 10
//! for quick desk-scale runs.

use clap::ValueEnum;

/// Per-case dimensions, ratios, and step/tolerance tuning.
#[derive(Debug, Clone, Copy)]
pub struct BenchCase {
    pub name: &'static str,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub sampling_ratio: f64,
    pub outlier_ratio: f64,
    /// t_U = t_u_mult / |Ω| for the Gauss-Seidel solvers.
    pub t_u_mult: f64,
    pub eps0: f64,
    /// Jacobi-variant tuning (differs only for case4).
    pub t_u_mult_jacobi: f64,
    pub eps0_jacobi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseName {
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Case6,
    Case7,
    Case8,
    #[value(name = "case1-scaled")]
    Case1Scaled,
    #[value(name = "case2-scaled")]
    Case2Scaled,
    #[value(name = "case3-scaled")]
    Case3Scaled,
    #[value(name = "case4-scaled")]
    Case4Scaled,
    #[value(name = "case5-scaled")]
    Case5Scaled,
    #[value(name = "case6-scaled")]
    Case6Scaled,
    #[value(name = "case7-scaled")]
    Case7Scaled,
    #[value(name = "case8-scaled")]
    Case8Scaled,
}

impl CaseName {
    pub fn spec(self) -> BenchCase {
        use CaseName::*;
        match self {
            Case1 | Case1Scaled => self.sized(full_case(1), "case1", "case1-scaled"),
            Case2 | Case2Scaled => self.sized(full_case(2), "case2", "case2-scaled"),
            Case3 | Case3Scaled => self.sized(full_case(3), "case3", "case3-scaled"),
            Case4 | Case4Scaled => self.sized(full_case(4), "case4", "case4-scaled"),
            Case5 | Case5Scaled => self.sized(full_case(5), "case5", "case5-scaled"),
            Case6 | Case6Scaled => self.sized(full_case(6), "case6", "case6-scaled"),
            Case7 | Case7Scaled => self.sized(full_case(7), "case7", "case7-scaled"),
            Case8 | Case8Scaled => self.sized(full_case(8), "case8", "case8-scaled"),
        }
    }

    fn is_scaled(self) -> bool {
        use CaseName::*;
        matches!(
            self,
            Case1Scaled | Case2Scaled | Case3Scaled | Case4Scaled | Case5Scaled
                | Case6Scaled | Case7Scaled | Case8Scaled
        )
    }

    fn sized(self, mut base: BenchCase, full: &'static str, scaled: &'static str) -> BenchCase {
        if self.is_scaled() {
            base.m /= 10;
            base.n /= 10;
            base.name = scaled;
        } else {
            base.name = full;
        }
        base
    }
}

fn full_case(index: usize) -> BenchCase {
    let mut c = BenchCase {
        name: "",
        m: 0,
        n: 0,
        r: 5,
        sampling_ratio: 0.10,
        outlier_ratio: 0.10,
        t_u_mult: 2.0,
        eps0: 30.0,
        t_u_mult_jacobi: 2.0,
        eps0_jacobi: 30.0,
    };
    match index {
        1 => {
            (c.m, c.n) = (5000, 5000);
        }
        2 => {
            (c.m, c.n) = (1000, 30000);
        }
        3 => {
            (c.m, c.n) = (10000, 10000);
        }
        4 => {
            (c.m, c.n, c.r) = (2000, 2000, 10);
            c.sampling_ratio = 0.20;
            c.t_u_mult_jacobi = 1.6;
            c.eps0_jacobi = 20.0;
        }
        5 => {
            (c.m, c.n, c.r) = (5000, 5000, 10);
        }
        6 => {
            (c.m, c.n) = (5000, 5000);
            c.sampling_ratio = 0.20;
        }
        7 => {
            (c.m, c.n) = (5000, 5000);
            c.outlier_ratio = 0.20;
        }
        8 => {
            (c.m, c.n) = (10000, 10000);
            c.sampling_ratio = 0.20;
            c.eps0 = 100.0;
            c.eps0_jacobi = 100.0;
        }
        _ => unreachable!("case index out of range"),
    }
    c
}
