use dphase::builtin;
use dphase::format::{parse_report_csv, read_grid, report_csv, write_grid};
use dphase::scenario::Scenario;
use dphase_core::verification::run_convergence;
use dphase_core::{Cylinder, GridField};

fn emit(w: &GridField) -> Vec<u8> {
    let mut out = Vec::new();
    write_grid(w, &mut out).unwrap();
    out
}

#[test]
fn grid_round_trip_is_byte_identical() {
    let dom = Cylinder::new(vec![0.1, -0.2], 0.75, 0.0, 0.3).unwrap();
    let w = GridField::from_fn(dom, 9, 7, |x, t| (3.0 * x[0]).sin() * (x[1] + t).exp() / 7.0).unwrap();
    let first = emit(&w);
    let back = read_grid(first.as_slice()).unwrap();
    assert_eq!(back.values(), w.values());
    assert_eq!(emit(&back), first);
}

#[test]
fn grid_errors() {
    let good = "dphase-grid v1 n=1 nx=2 nt=2 center=0.0 radius=1.0 t_lo=0.0 t_hi=1.0\n1\n2\n3\n4\n";
    assert!(read_grid(good.as_bytes()).is_ok());
    assert!(read_grid(good.replace("v1", "v9").as_bytes()).is_err());
    assert!(read_grid(good.trim_end_matches("4\n").as_bytes()).is_err());
    assert!(read_grid(good.replace("\n3\n", "\nx\n").as_bytes()).is_err());
    assert!(read_grid("".as_bytes()).is_err());
}

#[test]
fn report_round_trip_is_byte_identical() {
    let sc = Scenario::from_config(builtin::by_name("bounded-interior-rough").unwrap(), None).unwrap();
    let r = run_convergence(&sc.setup()).unwrap();
    let text = report_csv(&r.rows);
    let rows = parse_report_csv(&text).unwrap();
    assert_eq!(rows.len(), r.rows.len());
    assert_eq!(report_csv(&rows), text);
    assert!(parse_report_csv(&text.replacen("h,", "x,", 1)).is_err());
    assert!(parse_report_csv("").is_err());
}
