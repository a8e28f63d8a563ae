use polardem::bench::{synth_color_scene, synth_scene, SceneKind, SynthParams};
use polardem::polar::{cpfa_metrics, mpfa_metrics};
use polardem::{
    demosaick_cpfa_method, demosaick_mpfa, mosaic_cpfa, mosaic_mpfa, Angle, CpfaMethod, CpfaPattern, MethodParams,
    MpfaMethod, MpfaPattern,
};

fn params(width: usize) -> SynthParams {
    SynthParams {
        width,
        height: 48,
        center: (width as f64 / 2.0, 24.0),
        radius: 14.0,
        ..SynthParams::default()
    }
}

#[test]
fn every_mpfa_method_recovers_a_smooth_scene() {
    let truth = synth_scene(
        SceneKind::Sinusoid,
        &SynthParams {
            period: 24.0,
            ..params(48)
        },
        3,
    )
    .unwrap();
    for pat in [MpfaPattern::default(), MpfaPattern::default().shifted(1, 1)] {
        let raw = mosaic_mpfa(&truth, &pat);
        for m in MpfaMethod::ALL {
            let out = demosaick_mpfa(&raw, &pat, m, &MethodParams::default()).unwrap();
            let row = mpfa_metrics(&truth, &out).unwrap();
            for a in Angle::ALL {
                assert!(row.intensity(a) > 30.0, "{m} {pat} I{a}: {}", row.intensity(a));
            }
            assert!(row.aop.is_finite() && row.aop < 10.0, "{m}: AoP RMSE {}", row.aop);
        }
    }
}

#[test]
fn eari_beats_bilinear_on_a_disk() {
    let truth = synth_scene(SceneKind::Disk, &params(48), 0).unwrap();
    let pat = MpfaPattern::default();
    let raw = mosaic_mpfa(&truth, &pat);
    let score = |m| {
        let out = demosaick_mpfa(&raw, &pat, m, &MethodParams::default()).unwrap();
        let r = mpfa_metrics(&truth, &out).unwrap();
        r.values()[..4].iter().sum::<f64>() / 4.0
    };
    let (eari, bilinear) = (score(MpfaMethod::Eari), score(MpfaMethod::Bilinear));
    assert!(eari > bilinear, "eari {eari} bilinear {bilinear}");
}

#[test]
fn every_cpfa_method_runs_end_to_end() {
    let truth = synth_color_scene(SceneKind::Ramp, &params(32), 1).unwrap();
    let pat = CpfaPattern::default();
    let raw = mosaic_cpfa(&truth, &pat);
    for m in CpfaMethod::ALL {
        let out = demosaick_cpfa_method(&raw, &pat, m, &MethodParams::default()).unwrap();
        assert_eq!(out.dims(), (32, 48));
        let row = cpfa_metrics(&truth, &out).unwrap();
        assert!(row.i0 > 25.0 && row.s0 > 25.0, "{m}: {row:?}");
    }
}
