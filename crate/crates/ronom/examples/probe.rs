use ronom::basis::*;
use ronom::projection::*;
use ronom::quadrature::{TensorGrid, grid_weights};
use ronom::numerics::norm2;
fn main() {
    for (s, np, lambda) in [(4usize, 2usize, 1e-6f64), (8,2,1e-6), (16,2,1e-6), (32,2,1e-6), (8,2,1e-4)] {
        let b = build_basis(1, s, np).unwrap();
        let spec = RegularizerSpec { gamma1: 1.0, gamma2: 0.0, bc_points: vec![] };
        let l = reg_matrix(&b, &spec, 10).unwrap();
        let f = |x: f64| (std::f64::consts::TAU * x).sin();
        let grid = TensorGrid::uniform_unit(1, 1025);
        let w = grid_weights(&grid);
        let values: Vec<f64> = grid.points().iter().map(|&x| f(x)).collect();
        let samples = SampleSet::on_grid(&grid, values).unwrap();
        let alpha1 = project_discrete(&samples, &b, &l, lambda).unwrap();
        let co1 = Coefficients { alpha: alpha1.clone(), basis: &b };
        let rec1 = co1.eval(&grid.points());
        let resampled = SampleSet::on_grid(&grid, rec1.clone()).unwrap();
        let alpha2 = project_discrete(&resampled, &b, &l, lambda).unwrap();
        let co2 = Coefficients { alpha: alpha2.clone(), basis: &b };
        let rec2 = co2.eval(&grid.points());
        let fn_drift: f64 = rec1.iter().zip(&rec2).zip(&w).map(|((a,c),wi)| wi*(a-c)*(a-c)).sum::<f64>().sqrt();
        let d: Vec<f64> = alpha1.iter().zip(&alpha2).map(|(a,c)| a-c).collect();
        println!("s={s} np={np} lam={lambda:.0e}: alpha-drift {:.3e} fn-drift(L2) {:.3e}", norm2(&d), fn_drift);
    }
}
