use sbt::controllers::sbt_params_straightforward;
use sbt::sim::{inverter_closed_loop, Harmonic, InverterConfig, InverterController};
use sbt::transforms::Method;

fn thd(cfg: &InverterConfig, ctrl: InverterController) -> f64 {
    inverter_closed_loop(cfg, ctrl)
        .unwrap()
        .current_thd(cfg.f_grid, cfg.fs_ctrl, 10, 50)
        .unwrap()
}

fn controllers(cfg: &InverterConfig) -> [InverterController; 5] {
    let sbt = sbt_params_straightforward(&cfg.qr, cfg.sample_time()).unwrap();
    [
        InverterController::Pi,
        InverterController::PiQr(Method::Euler),
        InverterController::PiQr(Method::Tustin),
        InverterController::PiQr(Method::TustinPrewarp {
            omega_n: cfg.qr.omega_n,
        }),
        InverterController::PiQr(Method::Sbt(sbt)),
    ]
}

#[test]
fn harmonic_rejection_ordering() {
    let cfg = InverterConfig::default();
    let v: Vec<f64> = controllers(&cfg).iter().map(|c| thd(&cfg, *c)).collect();
    assert!(v[0] >= v[1], "{v:?}");
    assert!(v[1] > v[2], "{v:?}");
    assert!(v[2] > v[3], "{v:?}");
    assert!(v[3] >= v[4], "{v:?}");
}

#[test]
fn pi_only_is_worst() {
    let cfg = InverterConfig::default();
    let v: Vec<f64> = controllers(&cfg).iter().map(|c| thd(&cfg, *c)).collect();
    assert!(v[1..].iter().all(|x| *x < v[0]));
}

#[test]
fn sbt_beats_tustin() {
    let cfg = InverterConfig::default();
    let c = controllers(&cfg);
    assert!(thd(&cfg, c[4]) < thd(&cfg, c[2]));
}

#[test]
fn ordering_holds_with_the_capacitor_branch() {
    let cfg = InverterConfig {
        capacitor_branch: true,
        ..InverterConfig::default()
    };
    let v: Vec<f64> = controllers(&cfg).iter().map(|c| thd(&cfg, *c)).collect();
    assert!(v[1] > v[2] && v[2] > v[3], "{v:?}");
}

#[test]
fn runs_are_deterministic() {
    let cfg = InverterConfig {
        duration: 0.4,
        harmonic: Harmonic {
            f_hz: 950.0,
            amplitude: 100.0,
        },
        ..InverterConfig::default()
    };
    let a = inverter_closed_loop(&cfg, InverterController::PiQr(Method::Tustin)).unwrap();
    let b = inverter_closed_loop(&cfg, InverterController::PiQr(Method::Tustin)).unwrap();
    assert_eq!(a, b);
}
