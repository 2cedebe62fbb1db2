use tvk_core::atoms::*;
use tvk_core::field::{rect_poly, AnyField, Domain, SimpleSetSpec, Value};
use tvk_core::norm::MatrixNormSpec;
use tvk_core::witness::*;
use tvk_core::energy::EdgeQuadrature;

#[test]
fn probe_spin_atom() {
    let dom = Domain::Rectangle { bounds: [[-1.5, 1.5], [-1.5, 1.5]] };
    let centered = SimpleSetSpec::new(dom, vec![rect_poly(-0.5, 0.5, -0.5, 0.5)]).unwrap();
    let frob = MatrixNormSpec::frobenius(2, 2);
    let atom = atom_bd_rigid(&centered, &Value::Rigid { skew: 1.0, shift: [0.0, 0.0] }, &frob).unwrap();
    let eval = EnergyEvaluator::new(frob.clone(), EnergyKind::Tv); // wrong kind? no: use Td
    let eval = EnergyEvaluator::new(frob.clone(), EnergyKind::Td);
    let cfg = WitnessConfig { directions: 30, ..Default::default() };
    let catalog = build_catalog(&atom.field, &eval, &cfg).unwrap();
    for (i, dir) in catalog.directions.iter().enumerate() {
        let t = max_step(&atom.field, &dir.field, &eval, 1e-13, 40).unwrap();
        if t > 1e-5 {
            eprintln!("direction {i} class {} t* = {t:.6e}", dir.class);
            if let AnyField::Polygonal(f) = &dir.field {
                eprintln!("  region values: {:?}", f.regions.iter().map(|r| &r.value).collect::<Vec<_>>());
                eprintln!("  background: {:?}", f.background);
            }
            // energy curve with high-resolution quadrature
            let fine = EnergyEvaluator { spec: frob.clone(), kind: EnergyKind::Td, quad: EdgeQuadrature { panels: 64 } };
            for tt in [1e-5, 1e-4, 4e-4, 1e-3, 4e-3, 1e-2] {
                let ep = fine.energy(&atom.field.add_scaled(tt, &dir.field).unwrap()).unwrap();
                let em = fine.energy(&atom.field.add_scaled(-tt, &dir.field).unwrap()).unwrap();
                eprintln!("  t={tt:.1e}: E+ - 1 = {:+.3e}, E- - 1 = {:+.3e}", ep - 1.0, em - 1.0);
            }
        }
    }
}
