use std::fs::{self, File};

use fairseat_core::dataset::{generate_respondents, generate_schedule};
use fairseat_core::io::{
    load_responses, load_schedule, read_responses, read_schedule, run, write_responses, write_schedule, Mechanism, Mode,
    RunConfig,
};
use tempfile::TempDir;

#[test]
fn schedule_and_responses_round_trip() {
    let items = generate_schedule(3);
    let agents = generate_respondents(&items, 4);
    let mut buf = Vec::new();
    write_schedule(&items, &mut buf).unwrap();
    let back = read_schedule(buf.as_slice()).unwrap();
    assert_eq!(back, items);

    let mut buf = Vec::new();
    write_responses(&agents, &items, &mut buf).unwrap();
    let read = read_responses(buf.as_slice(), &items, None).unwrap();
    assert_eq!(read.len(), agents.len());
    for (a, b) in agents.iter().zip(&read) {
        assert_eq!((&a.student_id, a.status, &a.ratings, a.course_max), (&b.student_id, b.status, &b.ratings, b.course_max));
    }
}

#[test]
fn every_mechanism_runs_end_to_end() {
    let tmp = TempDir::new().unwrap();
    let items = generate_schedule(5);
    let agents = generate_respondents(&items, 6);
    let schedule = tmp.path().join("schedule.csv");
    let responses = tmp.path().join("responses.csv");
    write_schedule(&items, File::create(&schedule).unwrap()).unwrap();
    write_responses(&agents, &items, File::create(&responses).unwrap()).unwrap();
    assert_eq!(load_schedule(&schedule).unwrap().len(), 96);
    assert_eq!(load_responses(&responses, &items, None).unwrap().len(), 700);

    let mut usw = Vec::new();
    for mech in [Mechanism::Sd, Mechanism::Rr, Mechanism::Ys, Mechanism::UswFlow] {
        let out = tmp.path().join(mech.as_str());
        let config = RunConfig {
            mechanism: mech,
            seed: 7,
            k: 10,
            scale: 0.2,
            mode: Mode::Real,
            ell: 100,
            schedule: schedule.clone(),
            responses: responses.clone(),
            mapping: None,
            out: out.clone(),
        };
        let summary = run(&config).unwrap();
        let metrics = summary.metrics.unwrap();
        assert_eq!(summary.paths.is_some(), mech == Mechanism::Ys);
        assert!(out.join("allocation.csv").exists());
        let lines = fs::read_to_string(out.join("allocation.csv")).unwrap().lines().count() as u64;
        assert_eq!(lines, metrics.usw + 1);
        usw.push(metrics.usw);
    }
    // YS and the flow both reach the utilitarian optimum.
    assert_eq!(usw[2], usw[3]);
    assert!(usw[0] <= usw[3] && usw[1] <= usw[3]);
}
