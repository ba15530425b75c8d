use fesc::elements::three_d::*;
use fesc::fes::RestrictionKind;
use fesc::simplicial::fixtures;
use fesc::splits::worsey_piper_inpoints;
use fesc::linalg;

fn main() {
    let mesh = fixtures::regular_tet();
    let ips = worsey_piper_inpoints(&mesh).unwrap();
    let carriers = SplitCarriers::new(&mesh, &ips).unwrap();
    // edge and face spaces at each k; print dims
    let face = mesh.lookup(&[0, 1, 2]).unwrap();
    let edge = mesh.lookup(&[0, 1]).unwrap();
    for k in 0..=3usize {
        let fsp = fesc::elements::three_d::debug_face_space(&mesh, &carriers, &ips, face, k).unwrap();
        let esp = fesc::elements::three_d::debug_face_space(&mesh, &carriers, &ips, edge, k).unwrap();
        println!("k={k}: face dim {} edge dim {}", fsp.dim(), esp.dim());
        // manually restrict each face basis pair to the edge and test membership
        let corners = mesh.coords(mesh.simplex(edge));
        let mut fails = 0;
        for i in 0..fsp.dim() {
            let pair = fsp.basis_pair(i);
            let fu = pair.u0.carrier.face_carrier(&corners).unwrap();
            let t0 = pair.u0.trace_onto(&fu);
            let t1 = pair.u1.as_ref().map(|u1| {
                let fv = u1.carrier.face_carrier(&corners).unwrap();
                u1.trace_onto(&fv)
            });
            match (t0, t1) {
                (Ok(t0), Some(Ok(t1))) => {
                    // express in edge superspaces
                    let a = fesc::fes::debug_express(&esp.u_sup, &[t0]);
                    let b = fesc::fes::debug_express(esp.v_sup.as_ref().unwrap(), &[t1]);
                    match (a, b) {
                        (Ok(a), Ok(b)) => {
                            let raw = [a.column(0), b.column(0)].concat();
                            if linalg::solve(&esp.basis, &raw).is_none() {
                                fails += 1;
                            }
                        }
                        _ => { fails += 100; }
                    }
                }
                _ => { fails += 10000; }
            }
        }
        println!("  raw-expressible fails (x100 = sup fail, x10000 = trace fail): {fails}");
        let _ = RestrictionKind::DoubleTrace;
    }
}
