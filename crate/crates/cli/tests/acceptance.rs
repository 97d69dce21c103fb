//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any gating criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use causal_plot::eval::{enablement_score, validate_measure, EvalConfig, FnOracle, MockOracle, Story, ValidationSummary};
use causal_plot::graph::{EventId, EventType, PlanGraph, PreconditionClass, PreconditionStatus};
use causal_plot::knowledge::{
    action_phrase, item_in_precondition, location_in_precondition, pmi_dc_select, Bindings, Candidate, CandidateSet,
    Knowledge, KnowledgeConfig, QueryKind, ScriptedEntry, ScriptedFixture, ScriptedResponse, ScriptedSource,
    TemplateSet,
};
use causal_plot::ordering::total_order;
use causal_plot::planner::{plan, PlanError, PlanReport, PlannerConfig};
use causal_plot::similarity::{is_duplicate, Embedder, LocalEmbedder, SimilarityConfig, TableEmbedder};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned sizes and tolerances.
const FIG1_MAX_RUNTIME: Duration = Duration::from_secs(1);
const ORDER_TRIALS: usize = 1000;
const ORDER_MAX_EVENTS: usize = 8;
const PMI_TRIALS: usize = 1000;
const PMI_SHIFT_TOL: f64 = 1e-9;
const FUZZ_RUNS: u64 = 500;
const FUZZ_MAX_DEPTH: u32 = 4;
const FUZZ_MAX_BRANCHING: u32 = 3;
const ACCURACY_TARGET_PCT: f64 = 78.20;
const ACCURACY_TOL_PCT: f64 = 0.01;
const STRADDLE_PAIRS: usize = 100;
const STRADDLE_COSINE: f64 = 0.78;
const COSINE_TOL: f64 = 1e-9;

const EXPECTED_PLOT: [&str; 8] = [
    "Sally walked to get to store.",
    "Sally buy a gun from the store.",
    "Sally drove to get to Sally's house.",
    "Sally loaded the gun.",
    "John drove to get to John's home.",
    "John drove to get to Sally's house.",
    "Sally had an argument with John at Sally's house.",
    "Sally shoot John.",
];

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn scripted(name: &str) -> ScriptedSource {
    let f = ScriptedFixture::load(&fixtures().join(name)).expect("fixture loads");
    ScriptedSource::new(f)
}

struct Kit {
    templates: TemplateSet,
    embedder: LocalEmbedder,
    similarity: SimilarityConfig,
    config: KnowledgeConfig,
}

impl Kit {
    fn new() -> Self {
        Kit {
            templates: TemplateSet::builtin(),
            embedder: LocalEmbedder::default(),
            similarity: SimilarityConfig::default(),
            config: KnowledgeConfig::default(),
        }
    }

    fn k<'a>(&'a self, source: &'a ScriptedSource) -> Knowledge<'a> {
        Knowledge {
            source,
            templates: &self.templates,
            embedder: &self.embedder,
            similarity: &self.similarity,
            config: &self.config,
        }
    }
}

// 1. Golden plan replay through the command line.
fn criterion_1() -> Outcome {
    let dir = std::env::temp_dir().join(format!("causal-plot-acceptance-{}", std::process::id()));
    let f = fixtures();
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_causal-plot"))
        .args(["plan", "Sally shoot John", "--initial"])
        .arg(f.join("sally_shoots_john_initial.txt"))
        .arg("--scripted")
        .arg(f.join("sally_shoots_john.json"))
        .arg("--out")
        .arg(&dir)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(out.status.success(), format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
    let plot = std::fs::read_to_string(dir.join("plot.txt")).map_err(|e| e.to_string())?;
    let json = std::fs::read_to_string(dir.join("plan.json")).map_err(|e| e.to_string())?;
    let _ = std::fs::remove_dir_all(&dir);
    let lines: Vec<String> = plot.lines().map(|l| l.split_whitespace().collect::<Vec<_>>().join(" ")).collect();
    check(lines == EXPECTED_PLOT, format!("plot differs:\n{plot}"))?;
    let p = PlanGraph::from_json(&json).map_err(|e| e.to_string())?;
    p.validate().map_err(|e| e.to_string())?;
    check(p.event_count() == 8, format!("{} events", p.event_count()))?;
    let money: Vec<_> = p.preconditions().filter(|c| c.text == "Sally has money").collect();
    check(
        money.len() == 1 && money[0].status == PreconditionStatus::DanglingInitial,
        "money precondition is not a dangling initial condition",
    )?;
    let arg = p
        .events()
        .find(|e| e.text() == "Sally had an argument with John at Sally's house")
        .ok_or("argument event missing")?;
    let satisfied: Vec<_> = p.preconditions().filter(|c| c.status == PreconditionStatus::SatisfiedBy(arg.id)).collect();
    check(
        !satisfied.is_empty() && satisfied.iter().all(|c| c.class == PreconditionClass::InteractionWithOthers),
        "argument event does not satisfy an interaction precondition",
    )?;
    check(elapsed < FIG1_MAX_RUNTIME, format!("took {elapsed:?}"))?;
    Ok(format!("8 events, plot matches, {} ms", elapsed.as_millis()))
}

// 2. Topological order against exhaustive linear extensions.
fn priority(t: EventType) -> u8 {
    // reason > how > item need > item state > location > interaction > goal
    match t {
        EventType::Reason => 0,
        EventType::How => 1,
        EventType::ItemNeed => 2,
        EventType::ItemState => 3,
        EventType::Location => 4,
        EventType::InteractionWithOthers => 5,
        EventType::Goal => 6,
    }
}

const TAGS: [EventType; 6] = [
    EventType::Reason,
    EventType::How,
    EventType::ItemNeed,
    EventType::ItemState,
    EventType::Location,
    EventType::InteractionWithOthers,
];

fn class_for(t: EventType) -> PreconditionClass {
    match t {
        EventType::Reason => PreconditionClass::Reason,
        EventType::How => PreconditionClass::How,
        EventType::ItemNeed => PreconditionClass::ItemNeed,
        EventType::ItemState => PreconditionClass::ItemState,
        EventType::Location | EventType::Goal => PreconditionClass::Location,
        EventType::InteractionWithOthers => PreconditionClass::InteractionWithOthers,
    }
}

/// Random plan: events created in a random order, edges only from lower to
/// higher topological rank, every event with a path to the goal.
fn random_plan(rng: &mut ChaCha8Rng) -> (PlanGraph, Vec<(usize, usize)>) {
    let n = rng.random_range(1..=ORDER_MAX_EVENTS);
    let mut g = PlanGraph::new(Vec::new());
    // Topological rank r; the goal has rank n - 1.
    let mut creation: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        creation.swap(i, rng.random_range(0..=i));
    }
    let mut ids: Vec<Option<EventId>> = vec![None; n];
    for &r in &creation {
        let tag = if r == n - 1 { EventType::Goal } else { *TAGS.choose(rng).unwrap() };
        ids[r] = Some(g.add_event(&format!("event {r}"), tag, vec![]).unwrap());
    }
    let ids: Vec<EventId> = ids.into_iter().map(Option::unwrap).collect();
    let mut edges = Vec::new();
    for r in 0..n.saturating_sub(1) {
        let mut targets: BTreeSet<usize> = BTreeSet::new();
        targets.insert(rng.random_range(r + 1..n));
        for t in r + 1..n {
            if rng.random_bool(0.3) {
                targets.insert(t);
            }
        }
        for t in targets {
            let tag = g.event(ids[r]).unwrap().satisfies_class;
            let pid = g.add_precondition(ids[t], class_for(tag), &format!("c {r}->{t}"), "X").unwrap();
            g.add_link(ids[r], pid).unwrap();
            edges.push((r, t));
        }
    }
    (g, edges)
}

/// Lexicographically smallest key sequence over all linear extensions.
fn best_extension(n: usize, edges: &[(usize, usize)], key: &[(u8, u64)]) -> (Vec<usize>, usize) {
    fn go(
        n: usize,
        preds: &[BTreeSet<usize>],
        key: &[(u8, u64)],
        done: &mut Vec<usize>,
        best: &mut Option<Vec<(u8, u64)>>,
        best_order: &mut Vec<usize>,
        count: &mut usize,
    ) {
        if done.len() == n {
            *count += 1;
            let seq: Vec<(u8, u64)> = done.iter().map(|&i| key[i]).collect();
            if best.as_ref().is_none_or(|b| seq < *b) {
                *best = Some(seq);
                *best_order = done.clone();
            }
            return;
        }
        for v in 0..n {
            if !done.contains(&v) && preds[v].iter().all(|p| done.contains(p)) {
                done.push(v);
                go(n, preds, key, done, best, best_order, count);
                done.pop();
            }
        }
    }
    let mut preds = vec![BTreeSet::new(); n];
    for &(a, b) in edges {
        preds[b].insert(a);
    }
    let (mut best, mut order, mut count) = (None, Vec::new(), 0);
    go(n, &preds, key, &mut Vec::new(), &mut best, &mut order, &mut count);
    (order, count)
}

fn reachability(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x07de7);
    let mut extensions = 0usize;
    for trial in 0..ORDER_TRIALS {
        let (g, edges) = random_plan(&mut rng);
        let n = g.event_count();
        let by_text: BTreeMap<EventId, usize> =
            g.events().map(|e| (e.id, e.text()[6..].parse::<usize>().unwrap())).collect();
        let mut key = vec![(0u8, 0u64); n];
        for e in g.events() {
            key[by_text[&e.id]] = (priority(e.satisfies_class), e.created_seq);
        }
        let got: Vec<usize> =
            total_order(&g).map_err(|e| format!("trial {trial}: {e}"))?.iter().map(|id| by_text[id]).collect();
        let reach = reachability(n, &edges);
        let pos: BTreeMap<usize, usize> = got.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        check(pos.len() == n, format!("trial {trial}: not a permutation"))?;
        for a in 0..n {
            for b in 0..n {
                if reach[a][b] && pos[&a] > pos[&b] {
                    return Err(format!("trial {trial}: {a} reaches {b} but comes later"));
                }
            }
        }
        let (want, count) = best_extension(n, &edges, &key);
        extensions += count;
        check(got == want, format!("trial {trial}: got {got:?}, oracle {want:?}"))?;
    }
    Ok(format!("{ORDER_TRIALS} plans, {extensions} extensions enumerated, 0 violations"))
}

// 3. PMI_DC selection.
fn random_set(rng: &mut ChaCha8Rng) -> CandidateSet {
    let n = rng.random_range(1..=8);
    let mut items = Vec::new();
    for i in 0..n {
        // Coarse grid so exact PMI ties occur and tie-breaking is exercised.
        let cond = -(rng.random_range(0..40) as f64) / 4.0;
        let domain = -(rng.random_range(0..40) as f64) / 4.0;
        items.push(Candidate::scored(format!("answer {}", (b'a' + i as u8) as char), cond, domain, rng.random_range(2..6)));
    }
    CandidateSet { items }
}

/// Direct argmax of cond - domain; ties by larger count, then smaller text.
fn argmax(set: &CandidateSet) -> &Candidate {
    let mut best = &set.items[0];
    for c in &set.items[1..] {
        let (s, b) = (c.cond_logprob - c.domain_logprob, best.cond_logprob - best.domain_logprob);
        if s > b || (s == b && (c.count > best.count || (c.count == best.count && c.text < best.text))) {
            best = c;
        }
    }
    best
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a1);
    let mut ties = 0;
    for trial in 0..PMI_TRIALS {
        let set = random_set(&mut rng);
        let got = pmi_dc_select(&set).ok_or("empty selection")?;
        let want = argmax(&set);
        check(got.text == want.text, format!("trial {trial}: selected {} but argmax is {}", got.text, want.text))?;
        let top = want.cond_logprob - want.domain_logprob;
        if set.items.iter().filter(|c| c.cond_logprob - c.domain_logprob == top).count() > 1 {
            ties += 1;
        }
        // A constant added to every domain log-probability moves every score
        // by the same amount. Shifts sit on the quarter grid so the sums are
        // exact and tied maxima stay tied.
        let shift = rng.random_range(-200..200) as f64 / 4.0;
        let mut domain_only = set.clone();
        let mut joint = set.clone();
        for (d, j) in domain_only.items.iter_mut().zip(&mut joint.items) {
            d.domain_logprob += shift;
            j.domain_logprob += shift;
            j.cond_logprob += shift;
        }
        for (label, shifted, offset) in [("domain", &domain_only, -shift), ("joint", &joint, 0.0)] {
            let moved = pmi_dc_select(shifted).ok_or("empty selection")?;
            check(moved.text == got.text, format!("trial {trial}: {label} shift changed the selection"))?;
            for (a, b) in set.items.iter().zip(&shifted.items) {
                let drift = b.pmi() - a.pmi() - offset;
                check(drift.abs() <= PMI_SHIFT_TOL, format!("trial {trial}: {label} shift moved pmi by {drift}"))?;
            }
        }
    }
    Ok(format!("{PMI_TRIALS} sets, {ties} with tied maxima, shift tolerance {PMI_SHIFT_TOL:e}"))
}

// 4. Planner invariants under randomized scripted sources.
const NAMES: [&str; 3] = ["Ann", "Bo", "Cy"];
const VERBS: [&str; 6] = ["found", "took", "fixed", "sold", "washed", "opened"];
const OBJECTS: [&str; 6] = ["key", "box", "lamp", "boat", "map", "coin"];
const PLACES: [&str; 4] = ["the park", "the shop", "the dock", "home"];

fn entry(kind: QueryKind, bindings: &[(&str, &str)], samples: Vec<String>, repeats: usize) -> ScriptedEntry {
    ScriptedEntry {
        kind,
        bindings: bindings.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect::<Bindings>(),
        responses: vec![ScriptedResponse::Samples(samples); repeats],
        scores: Default::default(),
    }
}

struct World {
    rng: ChaCha8Rng,
    entries: Vec<ScriptedEntry>,
}

impl World {
    fn pick<'a>(&mut self, xs: &'a [&'a str]) -> &'a str {
        xs.choose(&mut self.rng).unwrap()
    }

    fn event(&mut self, who: &str) -> String {
        let (v, o) = (self.pick(&VERBS), self.pick(&OBJECTS));
        if self.rng.random_bool(0.3) {
            let other = self.pick(&NAMES);
            format!("{who} {v} the {o} with {other}")
        } else {
            format!("{who} {v} the {o}")
        }
    }

    fn twice(&mut self, answer: String) -> Vec<String> {
        let mut s = vec![answer.clone(), answer];
        if self.rng.random_bool(0.3) {
            s.push(self.pick(&["nothing", "a rope"]).to_string());
        }
        s
    }

    fn grow(&mut self, text: &str, depth: u32) {
        if depth >= FUZZ_MAX_DEPTH {
            return;
        }
        let chars: Vec<&str> = NAMES.iter().copied().filter(|n| text.split_whitespace().any(|w| w == *n)).collect();
        if chars.is_empty() {
            return;
        }
        let branches = self.rng.random_range(0..=FUZZ_MAX_BRANCHING);
        for _ in 0..branches {
            let who = *chars.choose(&mut self.rng).unwrap();
            let repeats = self.rng.random_range(1..=4);
            let child = self.event(who);
            match self.rng.random_range(0..6) {
                0 => {
                    let item = format!("a {}", self.pick(&OBJECTS));
                    let samples = self.twice(item.clone());
                    self.entries.push(entry(
                        QueryKind::ItemNeed,
                        &[("Person", who), ("Action", &action_phrase(text, who))],
                        samples,
                        1,
                    ));
                    let pre = format!("{who} has {item}");
                    let key = item_in_precondition(&pre);
                    self.entries.push(entry(
                        QueryKind::EventItemNeed,
                        &[("Person", who), ("item", &key)],
                        vec![child.clone(); 2],
                        repeats,
                    ));
                }
                1 => {
                    let place = self.pick(&PLACES).to_string();
                    let samples = self.twice(place.clone());
                    self.entries.push(entry(QueryKind::Location, &[("Person", who), ("Event", text)], samples, 1));
                    let key = location_in_precondition(&format!("{who} is at {place}"));
                    self.entries.push(entry(
                        QueryKind::EventLocation,
                        &[("Person", who), ("location", &key)],
                        vec![child.clone(); 2],
                        repeats,
                    ));
                }
                2 => {
                    let state = format!("The {} is {}", self.pick(&OBJECTS), self.pick(&["clean", "open", "broken"]));
                    let samples = self.twice(state.clone());
                    self.entries.push(entry(QueryKind::ItemState, &[("Person", who), ("Event", text)], samples, 1));
                    self.entries.push(entry(
                        QueryKind::EventItemState,
                        &[("item state", &state)],
                        vec![child.clone(); 2],
                        repeats,
                    ));
                }
                3 => {
                    self.entries.push(entry(QueryKind::DetectHow, &[("Event", text)], vec![format!("{text} through luck")], 1));
                    self.entries.push(entry(QueryKind::How, &[("Event", text)], vec![child.clone(); 2], 1));
                }
                4 => {
                    let reason = if self.rng.random_bool(0.3) { format!("{who} wants a boat") } else { child.clone() };
                    self.entries.push(entry(QueryKind::DetectReason, &[("Event", text)], vec![format!("{text} because of it")], 1));
                    self.entries.push(entry(QueryKind::Reason, &[("Event", text)], vec![reason; 2], 1));
                }
                _ => {
                    let other = NAMES.iter().copied().find(|n| *n != who).unwrap();
                    let meet = format!("{who} met {other} at {}", self.pick(&PLACES));
                    self.entries.push(entry(QueryKind::InteractionWithOthers, &[("Event", text)], vec![meet.clone(); 2], 1));
                    self.grow(&meet, depth + 1);
                    continue;
                }
            }
            self.grow(&child, depth + 1);
        }
    }
}

fn fuzz_fixture(seed: u64) -> (String, ScriptedFixture) {
    let mut w = World { rng: ChaCha8Rng::seed_from_u64(seed), entries: Vec::new() };
    let who = w.pick(&NAMES);
    let goal = w.event(who);
    w.grow(&goal, 0);
    (goal, ScriptedFixture { description: None, entries: w.entries })
}

fn fuzz_run(seed: u64, kit: &Kit) -> Result<PlanReport, String> {
    let (goal, fixture) = fuzz_fixture(seed);
    let source = ScriptedSource::new(fixture);
    let config = PlannerConfig {
        max_events: 40,
        characters: NAMES.iter().map(|s| s.to_string()).collect(),
        seed,
        ..Default::default()
    };
    let initial = vec![format!("{} has a map", NAMES[(seed % 3) as usize])];
    match plan(&goal, &initial, &config, kit.k(&source)) {
        Ok(r) => Ok(r),
        Err(PlanError::BudgetExceeded { partial, .. }) => Ok(*partial),
        Err(e) => Err(format!("seed {seed}: {e}")),
    }
}

fn plan_invariants(p: &PlanGraph) -> Result<(), String> {
    p.validate().map_err(|e| e.to_string())?;
    check(p.unsatisfied().is_empty(), "unsatisfied preconditions remain")?;
    let goal = p.goal().ok_or("no goal")?;
    let mut succ: BTreeMap<EventId, Vec<EventId>> = BTreeMap::new();
    for l in p.links() {
        succ.entry(l.source).or_default().push(l.target);
    }
    // Independent depth-first search from every event.
    for e in p.events() {
        let mut seen = BTreeSet::new();
        let mut stack = succ.get(&e.id).cloned().unwrap_or_default();
        while let Some(v) = stack.pop() {
            check(v != e.id, format!("cycle through {}", e.id))?;
            if seen.insert(v) {
                stack.extend(succ.get(&v).cloned().unwrap_or_default());
            }
        }
        if e.id != goal {
            check(seen.contains(&goal), format!("orphan event `{}`", e.text()))?;
        }
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let kit = Kit::new();
    let (mut events, mut cycles, mut reuses, mut dangling) = (0, 0, 0, 0);
    for seed in 0..FUZZ_RUNS {
        let a = fuzz_run(seed, &kit)?;
        plan_invariants(&a.plan).map_err(|e| format!("seed {seed}: {e}"))?;
        let b = fuzz_run(seed, &kit)?;
        let (ja, jb) = (a.plan.to_json().map_err(|e| e.to_string())?, b.plan.to_json().map_err(|e| e.to_string())?);
        check(ja == jb && a.trace.to_jsonl() == b.trace.to_jsonl(), format!("seed {seed}: rerun differs"))?;
        events += a.plan.event_count();
        cycles += a.trace.count("cycle");
        reuses += a.trace.count("reuse");
        dangling += a.plan.preconditions().filter(|p| p.status != PreconditionStatus::Unsatisfied && !matches!(p.status, PreconditionStatus::SatisfiedBy(_))).count();
    }
    Ok(format!(
        "{FUZZ_RUNS} runs, {events} events, {reuses} reuses, {cycles} cycles, {dangling} dangling, 0 violations"
    ))
}

// 5. Cycle backtracking fixtures.
fn criterion_5() -> Outcome {
    let kit = Kit::new();
    let two = scripted("cycle_two_candidates.json");
    let r = plan("Bo sang", &[], &PlannerConfig::default(), kit.k(&two)).map_err(|e| e.to_string())?;
    r.plan.validate().map_err(|e| e.to_string())?;
    check(r.plan.events().any(|e| e.text() == "Bo walked in"), "candidate #2 missing from the plan")?;
    check(!r.plan.events().any(|e| e.text() == "Bo drove to the hall"), "candidate #1 still in the plan")?;
    check(r.trace.count("cycle") == 1, format!("{} cycle records", r.trace.count("cycle")))?;

    let ex = scripted("cycle_exhaustion.json");
    let r = plan("Bo sang", &[], &PlannerConfig::default(), kit.k(&ex)).map_err(|e| e.to_string())?;
    r.plan.validate().map_err(|e| e.to_string())?;
    plan_invariants(&r.plan)?;
    let hall = r.plan.preconditions().find(|p| p.text == "Bo is at the hall").ok_or("hall precondition missing")?;
    check(hall.status == PreconditionStatus::DanglingHeuristic, format!("hall precondition is {:?}", hall.status))?;
    Ok(format!("candidate #2 kept after 1 cycle; exhaustion dangles after {} cycles", r.trace.count("cycle")))
}

// 6. Coherence arithmetic and validation accuracy.
fn story(id: &str, s: &[&str]) -> Story {
    Story::new(id, s.iter().map(|x| x.to_string()).collect()).unwrap()
}

fn criterion_6() -> Outcome {
    let cfg = EvalConfig::default();
    let mock = MockOracle { lexicon: vec![] };
    // Hand-computed: only the ball sentence has an earlier enabler.
    let s1 = story("s1", &["Tom bought a ball.", "Tom kicked the ball.", "Tom went home."]);
    // Only "used the key" is enabled; the box has no earlier mention and Bo
    // shares no character with earlier sentences.
    let s2 = story("s2", &["Ann found a key.", "Ann used the key.", "Ann opened the box.", "Bo took the box."]);
    let r1 = enablement_score(&s1, &mock, &cfg).map_err(|e| e.to_string())?;
    let r2 = enablement_score(&s2, &mock, &cfg).map_err(|e| e.to_string())?;
    check(r1.score == 1.0 / 2.0, format!("s1 scored {}", r1.score))?;
    check(r2.score == 1.0 / 3.0, format!("s2 scored {}", r2.score))?;
    // An oracle failure is excluded from the denominator.
    let flaky = FnOracle(|story: &[String], i: usize| {
        if i == 2 {
            Err(causal_plot::eval::EvalError::Oracle("timeout".into()))
        } else {
            Ok(story[0].clone())
        }
    });
    let r3 = enablement_score(&s1, &flaky, &cfg).map_err(|e| e.to_string())?;
    check(r3.score == 1.0 && r3.counted() == 1 && r3.errored() == 1, format!("errored story scored {}", r3.score))?;

    let n = 25;
    let v = ValidationSummary::from_rates(0.8539, n, 0.71, n);
    let pct = v.accuracy * 100.0;
    check((pct - ACCURACY_TARGET_PCT).abs() <= ACCURACY_TOL_PCT, format!("accuracy {pct:.4}%"))?;
    // The measured path agrees with the rate formula.
    let clean = vec![s1.clone(), s2.clone()];
    let corrupted = vec![
        causal_plot::eval::corrupt_story(&s1, &s2, 2, 1).map_err(|e| e.to_string())?,
        causal_plot::eval::corrupt_story(&s2, &s1, 3, 1).map_err(|e| e.to_string())?,
    ];
    let measured = validate_measure(&clean, &corrupted, &mock).map_err(|e| e.to_string())?;
    let expect = ValidationSummary::from_rates(measured.clean_response_rate, 2, measured.corrupted_none_rate, 2);
    check(measured == expect, "validate_measure disagrees with from_rates")?;
    Ok(format!("scores 1/2 and 1/3 exact; accuracy {pct:.3}% (target {ACCURACY_TARGET_PCT} +/- {ACCURACY_TOL_PCT})"))
}

// 8. Similarity threshold straddle.
fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ad);
    let cfg = SimilarityConfig::default();
    for i in 0..STRADDLE_PAIRS {
        let dim = rng.random_range(2..=16);
        let u = unit(&mut rng, dim);
        let w = loop {
            // Gram-Schmidt a random vector against u.
            let r = unit(&mut rng, dim);
            let d: f64 = r.iter().zip(&u).map(|(a, b)| a * b).sum();
            let o: Vec<f64> = r.iter().zip(&u).map(|(a, b)| a - d * b).collect();
            let n = o.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-3 {
                break o.iter().map(|x| x / n).collect::<Vec<f64>>();
            }
        };
        let s = (1.0 - STRADDLE_COSINE * STRADDLE_COSINE).sqrt();
        let v: Vec<f64> = u.iter().zip(&w).map(|(a, b)| STRADDLE_COSINE * a + s * b).collect();
        let (a, b) = (format!("left {i}"), format!("right {i}"));
        let e = TableEmbedder::new(dim).with(&a, u).with(&b, v);
        let cos = e.similarity(&a, &b).map_err(|e| e.to_string())?;
        check((cos - STRADDLE_COSINE).abs() < COSINE_TOL, format!("pair {i}: cosine {cos}"))?;
        for class in PreconditionClass::ALL {
            let dup = is_duplicate(&a, &b, Some(class), &e, &cfg).map_err(|e| e.to_string())?;
            // 0.75 for item need and location, 0.8 for the rest.
            let want = matches!(class, PreconditionClass::ItemNeed | PreconditionClass::Location);
            check(dup == want, format!("pair {i}: {class:?} duplicate = {dup}"))?;
        }
    }
    Ok(format!("{STRADDLE_PAIRS} pairs at cosine {STRADDLE_COSINE}: item need duplicate, reason distinct"))
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

fn main() {
    // Ignore libtest arguments such as --nocapture or a test filter.
    let criteria: [Criterion; 7] = [
        ("1", "golden plan replay", criterion_1),
        ("2", "topological order oracle", criterion_2),
        ("3", "PMI_DC selection", criterion_3),
        ("4", "planner invariants under fuzzing", criterion_4),
        ("5", "cycle backtracking", criterion_5),
        ("6", "coherence arithmetic and validation", criterion_6),
        ("8", "similarity threshold straddle", criterion_8),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        match f() {
            Ok(detail) => println!("acceptance {id} {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("acceptance {id} {name}: FAIL ({why})");
            }
        }
    }
    println!(
        "acceptance 7 absolute coherence scores with the original hosted models: NOT GATED \
         (needs the original endpoints; run `causal-plot eval --oracle source --config <live.toml>` to report numbers)"
    );
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
