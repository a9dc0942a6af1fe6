use coopsdmm::field::PrimeField;
use coopsdmm::matgrid::FieldMatrix;
use coopsdmm::par::Exec;
use coopsdmm::schemes::{expected_costs, random_inputs, run_sdmm, run_sdmm_with, Mode, SdmmConfig};
use coopsdmm::simnet::{CostLedger, Grouping, SimError, StragglerModel, LEDGER_CSV_HEADER};

fn exact(cfg: &SdmmConfig) -> CostLedger {
    let (a, b) = random_inputs(cfg).unwrap();
    let out = run_sdmm(cfg, &a, &b).unwrap();
    assert_eq!(out.result, a.matmul_with(&b, Exec::Sequential).unwrap(), "{cfg:?}");
    assert_eq!(out.ledger, expected_costs(cfg).unwrap(), "{cfg:?}");
    out.ledger
}

#[test]
fn matdot_modes_over_a_small_grid() {
    for p in [1, 2, 3] {
        for x in [1, 2, 3] {
            let rc = 2 * p + 2 * x - 1;
            for mode in [Mode::MatdotPlain, Mode::MatdotCoop, Mode::MatdotEnc] {
                let cfg = SdmmConfig::new(mode, 3, 3 * p, 2, p, x, rc + 1, 10007, (p * 10 + x) as u64);
                let l = exact(&cfg);
                let tr = 6;
                let rc = rc as u64;
                match mode {
                    Mode::MatdotPlain => assert_eq!((l.download, l.cooperation), (rc * tr, 0)),
                    Mode::MatdotCoop => {
                        let g = rc.div_ceil(x as u64);
                        assert_eq!((l.download, l.cooperation), (g * tr, (rc - g) * tr));
                    }
                    _ => assert_eq!((l.download, l.cooperation), (tr, (rc - 1) * tr)),
                }
            }
        }
    }
}

#[test]
fn gasp_modes() {
    // t = r = 4, so tr = 16.
    for (mode, want) in [
        (Mode::GaspPlain, (44, 0)),
        (Mode::GaspCoop, (96, 80)),
        (Mode::GaspEnc, (16, 40)),
    ] {
        let cfg = SdmmConfig::new(mode, 4, 6, 4, 1, 2, 12, 101, 5);
        let l = exact(&cfg);
        assert_eq!((l.download, l.cooperation), want, "{mode}");
    }
}

#[test]
fn stragglers_are_tolerated_up_to_the_threshold() {
    let mut cfg = SdmmConfig::new(Mode::MatdotCoop, 4, 4, 4, 2, 2, 9, 10007, 1);
    cfg.stragglers = vec![0, 5];
    exact(&cfg);
    cfg.stragglers = vec![0, 5, 7];
    let (a, b) = random_inputs(&cfg).unwrap();
    assert!(matches!(
        run_sdmm(&cfg, &a, &b),
        Err(SimError::InsufficientResponders { have: 6, need: 7 })
    ));
}

#[test]
fn any_response_order_decodes() {
    let cfg = SdmmConfig::new(Mode::MatdotCoop, 2, 4, 2, 2, 1, 8, 10007, 4);
    let (a, b) = random_inputs(&cfg).unwrap();
    let want = a.matmul(&b).unwrap();
    for seed in 0..20 {
        let out = run_sdmm_with(&cfg, &a, &b, &StragglerModel::new(seed), Exec::Sequential).unwrap();
        assert_eq!(out.result, want);
        assert_eq!(out.responders.len(), 5);
    }
}

#[test]
fn topology_is_enforced() {
    // Components {0,1} {2,3} {4,5} {6} with X = 2.
    let mut cfg = SdmmConfig::new(Mode::MatdotCoop, 2, 2, 2, 1, 2, 7, 10007, 3);
    cfg.topology = Some(vec![(0, 1), (2, 3), (4, 5)]);
    cfg.grouping = Grouping::ComponentAware;
    let (a, b) = random_inputs(&cfg).unwrap();
    let out = run_sdmm(&cfg, &a, &b).unwrap();
    assert_eq!(out.result, a.matmul(&b).unwrap());
    for g in &out.groups {
        assert!(g.iter().all(|&v| out.graph.same_component(g[0], v)));
    }

    // A component larger than X is refused.
    cfg.topology = Some(vec![(0, 1), (1, 2)]);
    assert!(matches!(run_sdmm(&cfg, &a, &b), Err(SimError::TopologyViolation(_))));
}

#[test]
fn transcript_is_json_lines_and_replayable() {
    let cfg = SdmmConfig::new(Mode::MatdotEnc, 2, 4, 2, 2, 1, 6, 10007, 8);
    let (a, b) = random_inputs(&cfg).unwrap();
    let first = run_sdmm(&cfg, &a, &b).unwrap();
    let second = run_sdmm_with(
        &cfg,
        &a,
        &b,
        &StragglerModel::with_non_responders(cfg.seed, []),
        Exec::Sequential,
    )
    .unwrap();
    assert_eq!(first.transcript.hash(), second.transcript.hash());
    let mut upload = 0;
    for line in first.transcript.to_jsonl().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["src"] == "user" && v["dst"].as_str().unwrap().starts_with('s') && v["payload"] == "share" {
            upload += v["symbols"].as_u64().unwrap();
        }
    }
    assert_eq!(upload, first.ledger.upload);
    let row = first.ledger.csv_row(cfg.mode.as_str(), cfg.p_or_mn(), cfg.x, cfg.n, 5);
    assert_eq!(row.split(',').count(), LEDGER_CSV_HEADER.split(',').count());
    assert!(row.starts_with("matdot-enc,2,1,6,5,"));
}

#[test]
fn small_field_is_a_config_error() {
    let cfg = SdmmConfig::new(Mode::MatdotCoop, 1, 1, 1, 1, 1, 7, 7, 0);
    assert!(cfg.validate().is_err());
    let f7 = PrimeField::new(7).unwrap();
    let a = FieldMatrix::zeros(f7, 1, 1);
    assert!(run_sdmm(&cfg, &a, &a).is_err());
}
