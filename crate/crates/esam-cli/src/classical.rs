//! The six classical feasibility test problems.
//!
//! Each problem is a family of convex constraints `g_i(x) <= 0` built from a
//! printed formula table: a branch selected by `i mod (branch count)` and a
//! base variable index `j` derived from `i` by integer division. Constraints
//! are enumerated in printed order; enumeration stops at the first constraint
//! whose indices would leave `1..=n` (no wrap-around, except where a problem
//! declares the boundary convention `x_0 = x_{n+1} = 0`) and is capped at
//! [`CONSTRAINT_CAP`], the block protocol's constraint budget.
//!
//! Index arithmetic below is written 1-based to match the formula tables,
//! with `a = j - 1` the 0-based slice offset.

use esam_core::subgrad::ConvexFunctionOracle;

use crate::error::{Error, Result};
use crate::problems::TestProblemInstance;

/// Constraint budget for the default block protocol (4 blocks of 50).
pub const CONSTRAINT_CAP: usize = 200;

type Oracle = ConvexFunctionOracle<f64>;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ClassicalFamily {
    ExtendedPowell,
    ChainedWood,
    ExtendedRosenbrock,
    BroydenTridiagonal,
    Penalty1,
    VariablyDimensioned,
}

impl ClassicalFamily {
    pub const ALL: [ClassicalFamily; 6] = [
        ClassicalFamily::ExtendedPowell,
        ClassicalFamily::ChainedWood,
        ClassicalFamily::ExtendedRosenbrock,
        ClassicalFamily::BroydenTridiagonal,
        ClassicalFamily::Penalty1,
        ClassicalFamily::VariablyDimensioned,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ClassicalFamily::ExtendedPowell => "extended-powell",
            ClassicalFamily::ChainedWood => "chained-wood",
            ClassicalFamily::ExtendedRosenbrock => "extended-rosenbrock",
            ClassicalFamily::BroydenTridiagonal => "broyden-tridiagonal",
            ClassicalFamily::Penalty1 => "penalty-1",
            ClassicalFamily::VariablyDimensioned => "variably-dimensioned",
        }
    }

    /// The dimension each problem is normally run at.
    pub fn default_n(self) -> usize {
        match self {
            ClassicalFamily::ExtendedPowell => 102,
            ClassicalFamily::ChainedWood => 68,
            ClassicalFamily::ExtendedRosenbrock => 101,
            ClassicalFamily::BroydenTridiagonal => 200,
            ClassicalFamily::Penalty1 => 199,
            ClassicalFamily::VariablyDimensioned => 198,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ClassicalFamily::ALL
            .into_iter()
            .find(|p| p.slug() == s)
            .ok_or_else(|| Error::UnknownProblemName(s.to_string()))
    }
}

/// Build one classical instance. `n_override` changes the dimension (the
/// constraint list shrinks or grows with the index maps);
/// `broyden_classical` is consulted only by the Broyden instance and swaps
/// in the classical `(3-2x_j)x_j` form, which is not convex and is marked
/// as such on its oracles.
pub fn build_classical_problem(
    name: ClassicalFamily,
    n_override: Option<usize>,
    broyden_classical: bool,
) -> Result<TestProblemInstance> {
    let n = n_override.unwrap_or_else(|| name.default_n());
    if n == 0 {
        return Err(Error::IndexMapOutOfBounds {
            problem: name.slug(),
            i: 1,
            j: 1,
            n,
        });
    }
    let (oracles, x0, feasible) = match name {
        ClassicalFamily::ExtendedPowell => (powell_oracles(n)?, powell_start(n), vec![0.0; n]),
        ClassicalFamily::ChainedWood => (wood_oracles(n)?, wood_start(n), vec![1.0; n]),
        ClassicalFamily::ExtendedRosenbrock => {
            (rosenbrock_oracles(n)?, rosenbrock_start(n), vec![1.0; n])
        }
        ClassicalFamily::BroydenTridiagonal => (
            broyden_oracles(n, broyden_classical),
            vec![-1.0; n],
            vec![1.5; n],
        ),
        ClassicalFamily::Penalty1 => (
            penalty_oracles(n),
            (1..=n).map(|l| l as f64).collect(),
            vec![0.0; n],
        ),
        ClassicalFamily::VariablyDimensioned => (
            variably_dimensioned_oracles(n),
            (1..=n).map(|l| 1.0 - l as f64 / n as f64).collect(),
            vec![1.0; n],
        ),
    };
    Ok(TestProblemInstance {
        name: name.slug().to_string(),
        n,
        oracles,
        x0,
        known_feasible_point: Some(feasible),
    })
}

fn label(slug: &str, i: usize) -> String {
    format!("{slug}[{i}]")
}

/// Extended Powell singular: quartets sharing `j = 2 div(i+3, 4) - 1`,
/// branches (affine, affine, squared-affine, squared-affine).
fn powell_oracles(n: usize) -> Result<Vec<Oracle>> {
    let mut out = Vec::new();
    for i in 1..=CONSTRAINT_CAP {
        let j = 2 * ((i + 3) / 4) - 1;
        let a = j - 1;
        let reach = match i % 4 {
            1 => j + 1,
            3 => j + 2,
            _ => j + 3,
        };
        if reach > n {
            break;
        }
        let name = label("extended-powell", i);
        out.push(match i % 4 {
            1 => Oracle::new(
                name,
                n,
                move |x: &[f64]| x[a] + 10.0 * x[a + 1],
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[a] = 1.0;
                    g[a + 1] = 10.0;
                    g
                },
            ),
            2 => Oracle::new(
                name,
                n,
                move |x: &[f64]| 5.0f64.sqrt() * (x[a + 2] - x[a + 3]),
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[a + 2] = 5.0f64.sqrt();
                    g[a + 3] = -(5.0f64.sqrt());
                    g
                },
            ),
            3 => Oracle::new(
                name,
                n,
                move |x: &[f64]| {
                    let u = x[a + 1] - 2.0 * x[a + 2];
                    u * u
                },
                move |x: &[f64]| {
                    let u = x[a + 1] - 2.0 * x[a + 2];
                    let mut g = vec![0.0; x.len()];
                    g[a + 1] = 2.0 * u;
                    g[a + 2] = -4.0 * u;
                    g
                },
            ),
            _ => Oracle::new(
                name,
                n,
                move |x: &[f64]| {
                    let u = x[a] - x[a + 3];
                    10.0f64.sqrt() * u * u
                },
                move |x: &[f64]| {
                    let u = x[a] - x[a + 3];
                    let mut g = vec![0.0; x.len()];
                    g[a] = 2.0 * 10.0f64.sqrt() * u;
                    g[a + 3] = -2.0 * 10.0f64.sqrt() * u;
                    g
                },
            ),
        });
    }
    if out.is_empty() {
        return Err(Error::IndexMapOutOfBounds {
            problem: "extended-powell",
            i: 1,
            j: 2,
            n,
        });
    }
    Ok(out)
}

fn powell_start(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|l| match l % 4 {
            1 => 3.0,
            2 => -1.0,
            3 => 0.0,
            _ => 1.0,
        })
        .collect()
}

/// Chained Wood: six branches over `j = 2 (div(i, 6) + 1)`. Note the sixth
/// branch (`i mod 6 = 0`) computes its own `j` one division later than its
/// five group mates, exactly as the index map reads.
fn wood_oracles(n: usize) -> Result<Vec<Oracle>> {
    let s90 = 90.0f64.sqrt();
    let s10 = 10.0f64.sqrt();
    let mut out = Vec::new();
    for i in 1..=CONSTRAINT_CAP {
        let j = 2 * (i / 6 + 1);
        let a = j - 1;
        let reach = match i % 6 {
            1 => j,
            2 => j - 1,
            4 => j + 1,
            _ => j + 2,
        };
        if reach > n {
            break;
        }
        let name = label("chained-wood", i);
        out.push(match i % 6 {
            1 => Oracle::new(
                name,
                n,
                move |x: &[f64]| 10.0 * (x[a - 1] * x[a - 1] - x[a]),
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[a - 1] = 20.0 * x[a - 1];
                    g[a] = -10.0;
                    g
                },
            ),
            2 => Oracle::new(
                name,
                n,
                move |x: &[f64]| x[a - 1] - 1.0,
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[a - 1] = 1.0;
                    g
                },
            ),
            3 => Oracle::new(
                name,
                n,
                move |x: &[f64]| s90 * (x[a + 1] * x[a + 1] - x[a + 2]),
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[a + 1] = 2.0 * s90 * x[a + 1];
                    g[a + 2] = -s90;
                    g
                },
            ),
            4 => Oracle::new(
                name,
                n,
                move |x: &[f64]| x[a + 1] - 1.0,
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[a + 1] = 1.0;
                    g
                },
            ),
            5 => Oracle::new(
                name,
                n,
                move |x: &[f64]| s10 * (2.0 - x[a] - x[a + 2]),
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[a] = -s10;
                    g[a + 2] = -s10;
                    g
                },
            ),
            _ => Oracle::new(
                name,
                n,
                move |x: &[f64]| (x[a + 2] - x[a]) / s10,
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[a + 2] = 1.0 / s10;
                    g[a] = -1.0 / s10;
                    g
                },
            ),
        });
    }
    if out.is_empty() {
        return Err(Error::IndexMapOutOfBounds {
            problem: "chained-wood",
            i: 1,
            j: 2,
            n,
        });
    }
    Ok(out)
}

fn wood_start(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|l| match (l <= 4, l % 2 == 1) {
            (true, true) => -3.0,
            (true, false) => -1.0,
            (false, true) => -2.0,
            (false, false) => 0.0,
        })
        .collect()
}

/// Extended Rosenbrock: pairs over `j = div(i+1, 2)`, one parabolic and one
/// affine constraint each.
fn rosenbrock_oracles(n: usize) -> Result<Vec<Oracle>> {
    let mut out = Vec::new();
    for i in 1..=CONSTRAINT_CAP {
        let j = (i + 1) / 2;
        let a = j - 1;
        let reach = if i % 2 == 1 { j + 1 } else { j };
        if reach > n {
            break;
        }
        let name = label("extended-rosenbrock", i);
        out.push(if i % 2 == 1 {
            Oracle::new(
                name,
                n,
                move |x: &[f64]| 10.0 * (x[a] * x[a] - x[a + 1]),
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[a] = 20.0 * x[a];
                    g[a + 1] = -10.0;
                    g
                },
            )
        } else {
            Oracle::new(
                name,
                n,
                move |x: &[f64]| x[a] - 1.0,
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[a] = 1.0;
                    g
                },
            )
        });
    }
    if out.is_empty() {
        return Err(Error::IndexMapOutOfBounds {
            problem: "extended-rosenbrock",
            i: 1,
            j: 2,
            n,
        });
    }
    Ok(out)
}

fn rosenbrock_start(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|l| if l % 2 == 1 { -1.2 } else { -1.0 })
        .collect()
}

/// Broyden tridiagonal with the boundary convention `x_0 = x_{n+1} = 0`.
/// The default form is the affine one as the table prints it,
/// `(3 - 2x_j) - x_{j-1} - 2x_{j+1} + 1`; the classical variant multiplies
/// the leading term by `x_j`, which makes the constraint concave in `x_j`,
/// so those oracles carry a non-convexity mark.
fn broyden_oracles(n: usize, classical: bool) -> Vec<Oracle> {
    (1..=CONSTRAINT_CAP.min(n))
        .map(|i| {
            let a = i - 1;
            let name = label("broyden-tridiagonal", i);
            let oracle = if classical {
                Oracle::new(
                    name,
                    n,
                    move |x: &[f64]| {
                        let mut v = (3.0 - 2.0 * x[a]) * x[a] + 1.0;
                        if a > 0 {
                            v -= x[a - 1];
                        }
                        if a + 1 < x.len() {
                            v -= 2.0 * x[a + 1];
                        }
                        v
                    },
                    move |x: &[f64]| {
                        let mut g = vec![0.0; x.len()];
                        g[a] = 3.0 - 4.0 * x[a];
                        if a > 0 {
                            g[a - 1] = -1.0;
                        }
                        if a + 1 < x.len() {
                            g[a + 1] = -2.0;
                        }
                        g
                    },
                )
            } else {
                Oracle::new(
                    name,
                    n,
                    move |x: &[f64]| {
                        let mut v = (3.0 - 2.0 * x[a]) + 1.0;
                        if a > 0 {
                            v -= x[a - 1];
                        }
                        if a + 1 < x.len() {
                            v -= 2.0 * x[a + 1];
                        }
                        v
                    },
                    move |x: &[f64]| {
                        let mut g = vec![0.0; x.len()];
                        g[a] = -2.0;
                        if a > 0 {
                            g[a - 1] = -1.0;
                        }
                        if a + 1 < x.len() {
                            g[a + 1] = -2.0;
                        }
                        g
                    },
                )
            };
            if classical {
                oracle.mark_nonconvex()
            } else {
                oracle
            }
        })
        .collect()
}

/// Penalty 1: bound constraints `x_i <= 1` in positions 1..=199 and one
/// ball-like constraint `sum(x_j^2 - 1/4) / sqrt(1000) <= 0` in position
/// 200, summing over all `n` variables.
fn penalty_oracles(n: usize) -> Vec<Oracle> {
    let scale = 1.0 / 1000.0f64.sqrt();
    let mut out = Vec::new();
    for i in 1..CONSTRAINT_CAP {
        if i > n {
            break;
        }
        let a = i - 1;
        out.push(Oracle::new(
            label("penalty-1", i),
            n,
            move |x: &[f64]| x[a] - 1.0,
            move |x: &[f64]| {
                let mut g = vec![0.0; x.len()];
                g[a] = 1.0;
                g
            },
        ));
    }
    // The summed constraint sits in printed position 200, so it is part of
    // the valid prefix only once all 199 bound constraints are in range.
    if n >= CONSTRAINT_CAP - 1 {
        out.push(Oracle::new(
            label("penalty-1", CONSTRAINT_CAP),
            n,
            move |x: &[f64]| {
                scale * x.iter().fold(0.0, |acc, &v| acc + (v * v - 0.25))
            },
            move |x: &[f64]| x.iter().map(|&v| 2.0 * scale * v).collect(),
        ));
    }
    out
}

/// Variably dimensioned: bound constraints in positions 1..=n, the weighted
/// sum `sum j (x_j - 1)` at n+1, and at n+2 the printed double square
/// `(sum j (x_j - 1)^2)^2`, whose zero set pins `x` to the all-ones point.
fn variably_dimensioned_oracles(n: usize) -> Vec<Oracle> {
    let mut out = Vec::new();
    for i in 1..=CONSTRAINT_CAP.min(n) {
        let a = i - 1;
        out.push(Oracle::new(
            label("variably-dimensioned", i),
            n,
            move |x: &[f64]| x[a] - 1.0,
            move |x: &[f64]| {
                let mut g = vec![0.0; x.len()];
                g[a] = 1.0;
                g
            },
        ));
    }
    if n + 1 <= CONSTRAINT_CAP {
        out.push(Oracle::new(
            label("variably-dimensioned", n + 1),
            n,
            move |x: &[f64]| {
                x.iter()
                    .enumerate()
                    .fold(0.0, |acc, (a, &v)| acc + (a + 1) as f64 * (v - 1.0))
            },
            move |x: &[f64]| (1..=x.len()).map(|j| j as f64).collect(),
        ));
    }
    if n + 2 <= CONSTRAINT_CAP {
        let weighted_sq = |x: &[f64]| {
            x.iter().enumerate().fold(0.0, |acc, (a, &v)| {
                acc + (a + 1) as f64 * (v - 1.0) * (v - 1.0)
            })
        };
        out.push(Oracle::new(
            label("variably-dimensioned", n + 2),
            n,
            move |x: &[f64]| {
                let h = weighted_sq(x);
                h * h
            },
            move |x: &[f64]| {
                let h = weighted_sq(x);
                x.iter()
                    .enumerate()
                    .map(|(a, &v)| 4.0 * h * (a + 1) as f64 * (v - 1.0))
                    .collect()
            },
        ));
    }
    out
}
