use ilrepair::demo;
use ilrepair::dialogue::paraphrase;
use ilrepair::engine::{
    accuracy, evaluate_corpus, run_session, synth, OracleAnswerer, ScriptedAnswerer, ServiceError, Session,
    SessionError, SessionService,
};
use ilrepair::hypgen::{Hypothesis, Policy, RepairConfig};
use ilrepair::minet::Networks;
use ilrepair::read_fs;
use ilrepair::record::{read_corpus, write_corpus};

const FIGURE_TRANSCRIPT: [&str; 4] = [
    "Is your sentence mainly about someone being free?",
    "Is your sentence a statement?",
    "Is Tuesday afternoon the ninth the time of being free in your sentence?",
    "Is it \"I\" who is being free in your sentence?",
];

const FIGURE_RESULT: &str = "((sentence-type *state) (frame *free) \
    (when ((frame *simple-time) (time-of-day afternoon) (day-of-week tuesday) (day 9))) \
    (who ((frame *i))))";

#[test]
fn figure_session_with_oracle() {
    let spec = demo::spec();
    let mut nets = demo::trained_networks(&spec);
    let rec = demo::figure();
    let gold = rec.gold.clone().unwrap();
    let mut oracle = OracleAnswerer { gold: &gold, spec: &spec };
    let res = run_session(&rec.output, &spec, &mut nets, &demo::glosses(), &mut oracle, &RepairConfig::default(), Some(&gold));
    let asked: Vec<&str> = res.transcript.iter().map(|e| e.question.as_str()).collect();
    // leftover chunks are still offered once the analysis is complete
    assert_eq!(asked[..4], FIGURE_TRANSCRIPT);
    assert!(res.transcript[..4].iter().all(|e| e.answer));
    assert!(res.transcript[4..].iter().all(|e| !e.answer));
    assert_eq!(res.final_ilt, read_fs(FIGURE_RESULT).unwrap());
    assert_eq!(res.questions_to_converge, 4);
    assert_eq!(res.accuracy_after, Some(1.0));
    assert_eq!(paraphrase(&res.final_ilt, &demo::glosses()), "I am free Tuesday afternoon the ninth.");
}

#[test]
fn figure_session_with_scripted_answers() {
    let spec = demo::spec();
    let mut nets = demo::trained_networks(&spec);
    let rec = demo::figure();
    let mut script = ScriptedAnswerer::new([true, true, true, false], false);
    let config = RepairConfig {
        max_questions: 4,
        ..RepairConfig::default()
    };
    let res = run_session(&rec.output, &spec, &mut nets, &demo::glosses(), &mut script, &config, None);
    assert_eq!(res.questions_used, 4);
    assert_eq!(res.questions_to_converge, 3);
    assert!(res.final_ilt.get("who").is_none());
    assert!(res.final_ilt.get("when").is_some());
    assert_eq!(res.accuracy_before, None);
}

#[test]
fn step_api_matches_run_session() {
    let spec = demo::spec();
    let glosses = demo::glosses();
    let rec = demo::figure();
    let gold = rec.gold.clone().unwrap();
    let mut nets = demo::trained_networks(&spec);
    let mut session = Session::new(&rec.output, &spec, &nets, RepairConfig::default());
    assert_eq!(session.answer(true, &spec, &mut nets), Err(SessionError::NoOutstandingQuestion));
    let mut seqs = Vec::new();
    while let Some(q) = session.next_question(&spec, &nets, &glosses) {
        seqs.push(q.seq);
        let h: Hypothesis = q.hypothesis.clone();
        let yes = ilrepair::engine::oracle_answer(&gold, &h, &session.drm, &spec);
        session.answer(yes, &spec, &mut nets).unwrap();
    }
    assert!(session.is_finished());
    assert_eq!(seqs, (1..=10).collect::<Vec<_>>());
    assert_eq!(session.result(&spec), read_fs(FIGURE_RESULT).unwrap());
}

#[test]
fn zero_budget_returns_the_parse_untouched() {
    let spec = demo::spec();
    let mut nets = demo::trained_networks(&spec);
    let rec = demo::figure();
    let mut script = ScriptedAnswerer::new([], true);
    let config = RepairConfig {
        max_questions: 0,
        ..RepairConfig::default()
    };
    let res = run_session(&rec.output, &spec, &mut nets, &demo::glosses(), &mut script, &config, rec.gold.as_ref());
    assert_eq!(Some(&res.final_ilt), rec.output.partial.as_ref());
    assert_eq!(res.questions_used, 0);
    assert_eq!(res.accuracy_before, res.accuracy_after);
}

#[test]
fn accuracy_is_flat_f1() {
    let gold = read_fs("((frame *free) (who ((frame *i))) (when ((frame *simple-time) (day 9))))").unwrap();
    assert_eq!(accuracy(&gold, &gold), 1.0);
    let half = read_fs("((frame *free) (who ((frame *i))))").unwrap();
    // 2 of 4 gold pairs, precision 1
    assert!((accuracy(&half, &gold) - 2.0 * 0.5 / 1.5).abs() < 1e-12);
    assert_eq!(accuracy(&read_fs("((frame *busy))").unwrap(), &gold), 0.0);
}

#[test]
fn bundled_corpus_is_reproducible() {
    let spec = demo::spec();
    assert_eq!(
        demo::synthetic_text(&spec, synth::DEFAULT_SIZE, synth::DEFAULT_SEED),
        demo::SYNTHETIC
    );
}

#[test]
fn corpus_text_round_trips() {
    let records = demo::synthetic();
    assert_eq!(records.len(), 60);
    assert_eq!(read_corpus(&write_corpus(&records)).unwrap(), records);
    let spec = demo::spec();
    for r in &records {
        let gold = r.gold.as_ref().unwrap();
        let leaf = spec.leaf_type_of(gold).unwrap();
        assert!(spec.conforms(gold, leaf).unwrap(), "{gold}");
    }
}

#[test]
fn eval_table_has_a_row_per_policy_and_budget() {
    let spec = demo::spec();
    let nets = demo::trained_networks(&spec);
    let records = &demo::synthetic()[..10];
    let report = evaluate_corpus(records, &spec, &nets, &demo::glosses(), &[0, 3], &Policy::all(), &RepairConfig::default(), true)
        .unwrap();
    assert_eq!(report.rows.len(), 18);
    assert_eq!(report.outcomes.len(), 180);
    let tsv = report.to_tsv();
    assert!(tsv.starts_with("policy\tbudget\taccuracy-before\taccuracy-after\tmean-questions\n"));
    assert!(tsv.contains("\nmeta\t3\t"));
    assert!(tsv.contains("\nbu-td-bu\t0\t"));
}

#[test]
fn policy_names_parse_back() {
    for p in Policy::all() {
        assert_eq!(p.to_string().parse::<Policy>().unwrap(), p);
    }
    assert!("td-td".parse::<Policy>().is_err());
}

#[test]
fn service_runs_the_figure_and_checks_order() {
    let spec = demo::spec();
    let nets = demo::trained_networks(&spec);
    let service = SessionService::new(spec, nets, demo::glosses(), RepairConfig::default());
    let view = service.create(demo::FIGURE).unwrap();
    assert_eq!(view.status, "awaiting-answer");
    let q = view.question.clone().unwrap();
    assert_eq!(q.text, FIGURE_TRANSCRIPT[0]);
    assert_eq!(
        service.answer(view.id, true, Some(q.seq + 1)),
        Err(ServiceError::OutOfOrder { expected: 1, got: 2 })
    );
    assert_eq!(service.question(99), Err(ServiceError::UnknownSession(99)));
    let mut view = view;
    while let Some(q) = view.question.clone() {
        view = service.answer(view.id, q.seq <= 4, Some(q.seq)).unwrap();
    }
    assert_eq!(view.status, "done");
    assert_eq!(view.ilt, read_fs(FIGURE_RESULT).unwrap().to_string());
    let asked: Vec<&str> = view.transcript.iter().map(|t| t.question.as_str()).collect();
    assert_eq!(asked[..4], FIGURE_TRANSCRIPT);
    assert_eq!(service.answer(view.id, true, None), Err(ServiceError::NoOutstandingQuestion));
    // answers reinforced the shared networks
    assert_ne!(service.networks(), demo::trained_networks(&demo::spec()));
}

#[test]
fn service_stop_and_bad_record() {
    let spec = demo::spec();
    let service = SessionService::new(spec.clone(), Networks::for_spec(&spec, 0.5), demo::glosses(), RepairConfig::default());
    assert!(matches!(service.create("(record (quality maybe))"), Err(ServiceError::BadRecord(_))));
    let view = service.create(demo::FIGURE).unwrap();
    let partial = service.result(view.id).unwrap();
    assert_eq!(partial.status, "awaiting-answer");
    let stopped = service.stop(view.id).unwrap();
    assert_eq!(stopped.status, "done");
    assert!(stopped.question.is_none());
    assert_eq!(stopped.ilt, partial.ilt);
}
