//! The five-step joint uplink/downlink relay selection handshake.
//!
//! 1. MS broadcasts RTS1 at `P_max - P_C`; relays measure `h1` and keep
//!    themselves in Γ if they pass `g_th1`. The BS measures `h_D`.
//! 2. Relays in Γ send RTS2 with a CQI (their `h1`) to the BS.
//! 3. The BS measures `h2` of each RTS2 sender and builds Σ with `g_th2`.
//! 4. The BS picks the relay (or the direct link) and broadcasts the choice
//!    together with `h_D`.
//! 5. Data flows in both directions over the chosen route.
//!
//! Frames are abstract records and every step is synchronous; there is no
//! contention model.

use std::fmt::{self, Write as _};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::energy::TransmissionMode;
use crate::error::Result;
use crate::model::{check_zeta, realize_links, LinkState, Scenario, SystemParams};
use crate::selection::{
    min_energy_select, passes_gamma, passes_sigma, threshold_gth1, threshold_gth2,
    SelectionDecision,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    Ms,
    Bs,
    Relay(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Ms => f.write_str("MS"),
            Node::Bs => f.write_str("BS"),
            Node::Relay(i) => write!(f, "R{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    Rts1 { tx_power_w: f64 },
    Rts2 { tx_power_w: f64, cqi_h1: f64 },
    /// Local decision at the BS; nothing goes on the air.
    CandidateSet { sigma: Vec<usize> },
    RelayChoice { relay: usize, h_direct: f64 },
    DirectChoice { h_direct: f64 },
    Data { direction: Direction, tx_power_w: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Uplink,
    Downlink,
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Rts1 { tx_power_w } => write!(f, "RTS1 tx_power_w={tx_power_w:e}"),
            Payload::Rts2 { tx_power_w, cqi_h1 } => {
                write!(f, "RTS2 tx_power_w={tx_power_w:e} cqi_h1={cqi_h1:e}")
            }
            Payload::CandidateSet { sigma } => write!(f, "SIGMA {}", fmt_indices(sigma)),
            Payload::RelayChoice { relay, h_direct } => {
                write!(f, "SELECT relay=R{relay} h_direct={h_direct:e}")
            }
            Payload::DirectChoice { h_direct } => write!(f, "SELECT direct h_direct={h_direct:e}"),
            Payload::Data {
                direction,
                tx_power_w,
            } => {
                let d = match direction {
                    Direction::Uplink => "uplink",
                    Direction::Downlink => "downlink",
                };
                match tx_power_w {
                    Some(p) => write!(f, "DATA {d} tx_power_w={p:e}"),
                    None => write!(f, "DATA {d}"),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub step: u8,
    pub sender: Node,
    pub receivers: Vec<Node>,
    pub payload: Payload,
}

impl Message {
    /// Whether the message is a control frame sent over the air.
    pub fn is_signalling(&self) -> bool {
        self.step <= 4 && !matches!(self.payload, Payload::CandidateSet { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTrace {
    pub link_state: LinkState,
    pub zeta: f64,
    pub rate_r: f64,
    pub gamma_set: Vec<usize>,
    pub sigma_set: Vec<usize>,
    pub threshold_gth1: f64,
    /// `(relay, g_th2)` for every relay in Γ.
    pub threshold_gth2: Vec<(usize, f64)>,
    pub decision: SelectionDecision,
    pub message_log: Vec<Message>,
}

/// Relays passing the step-1 threshold.
pub fn candidate_set_gamma(links: &LinkState, rate_r: f64, params: &SystemParams) -> Vec<usize> {
    (0..links.relay_count())
        .filter(|&i| passes_gamma(links.h1[i], rate_r, params))
        .collect()
}

/// Members of `gamma` passing the step-3 threshold.
pub fn candidate_set_sigma(
    gamma: &[usize],
    links: &LinkState,
    rate_r: f64,
    params: &SystemParams,
) -> Vec<usize> {
    gamma
        .iter()
        .copied()
        .filter(|&i| passes_sigma(links.h1[i], links.h2[i], links.h_direct, rate_r, params))
        .collect()
}

/// Realizes the links of `scenario` and runs the handshake on them.
pub fn run_judrs<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<ProtocolTrace> {
    scenario.params.validate()?;
    let links = realize_links(&scenario.geometry, &scenario.params, scenario.fading, rng)?;
    run_on_links(
        links,
        scenario.traffic.zeta(),
        scenario.rate_r,
        &scenario.params,
    )
}

/// Runs the handshake on a fixed realization; replaying a trace's
/// `link_state` reproduces it exactly.
pub fn run_on_links(
    links: LinkState,
    zeta: f64,
    rate_r: f64,
    params: &SystemParams,
) -> Result<ProtocolTrace> {
    links.validate()?;
    check_zeta(zeta)?;
    let n = links.relay_count();
    let probe = params.radiated_budget();
    let all_relays: Vec<Node> = (0..n).map(Node::Relay).collect();
    let mut log = Vec::new();

    // Step 1
    let mut receivers = all_relays.clone();
    receivers.push(Node::Bs);
    log.push(Message {
        step: 1,
        sender: Node::Ms,
        receivers,
        payload: Payload::Rts1 { tx_power_w: probe },
    });
    let gth1 = threshold_gth1(rate_r, params);
    let gamma = candidate_set_gamma(&links, rate_r, params);

    // Step 2
    for &i in &gamma {
        log.push(Message {
            step: 2,
            sender: Node::Relay(i),
            receivers: vec![Node::Bs],
            payload: Payload::Rts2 {
                tx_power_w: probe,
                cqi_h1: links.h1[i],
            },
        });
    }

    // Step 3
    let gth2: Vec<(usize, f64)> = gamma
        .iter()
        .map(|&i| (i, threshold_gth2(links.h1[i], links.h_direct, rate_r, params)))
        .collect();
    let sigma = candidate_set_sigma(&gamma, &links, rate_r, params);
    log.push(Message {
        step: 3,
        sender: Node::Bs,
        receivers: Vec::new(),
        payload: Payload::CandidateSet {
            sigma: sigma.clone(),
        },
    });

    // Step 4
    let all = links.candidates();
    let sigma_candidates: Vec<_> = sigma.iter().map(|&i| all[i]).collect();
    let decision = min_energy_select(&sigma_candidates, links.h_direct, zeta, rate_r, params)?;
    let mut everyone = vec![Node::Ms];
    everyone.extend(all_relays);
    match (decision.mode, decision.relay_index) {
        (TransmissionMode::Cooperative, Some(relay)) => log.push(Message {
            step: 4,
            sender: Node::Bs,
            receivers: everyone,
            payload: Payload::RelayChoice {
                relay,
                h_direct: links.h_direct,
            },
        }),
        _ => log.push(Message {
            step: 4,
            sender: Node::Bs,
            receivers: everyone,
            payload: Payload::DirectChoice {
                h_direct: links.h_direct,
            },
        }),
    }

    // Step 5
    let data = |sender, receiver, direction, tx_power_w| Message {
        step: 5,
        sender,
        receivers: vec![receiver],
        payload: Payload::Data {
            direction,
            tx_power_w,
        },
    };
    match decision.mode {
        TransmissionMode::Cooperative => {
            let relay = Node::Relay(decision.relay_index.expect("cooperative has a relay"));
            let p = decision
                .energy_report
                .and_then(|r| r.link_powers)
                .expect("cooperative has powers");
            log.push(data(Node::Ms, relay, Direction::Uplink, Some(p.p_ms_uplink)));
            log.push(data(relay, Node::Bs, Direction::Uplink, Some(p.p_relay_uplink)));
            log.push(data(Node::Bs, relay, Direction::Downlink, None));
            log.push(data(relay, Node::Ms, Direction::Downlink, Some(p.p_relay_downlink)));
        }
        TransmissionMode::Direct => {
            let p = crate::energy::direct_power(links.h_direct, rate_r, params)?;
            log.push(data(Node::Ms, Node::Bs, Direction::Uplink, Some(p)));
            log.push(data(Node::Bs, Node::Ms, Direction::Downlink, None));
        }
        TransmissionMode::Infeasible => {}
    }

    Ok(ProtocolTrace {
        link_state: links,
        zeta,
        rate_r,
        gamma_set: gamma,
        sigma_set: sigma,
        threshold_gth1: gth1,
        threshold_gth2: gth2,
        decision,
        message_log: log,
    })
}

impl ProtocolTrace {
    /// Over-the-air control frames of the single joint selection round.
    pub fn signalling_messages(&self) -> usize {
        self.message_log.iter().filter(|m| m.is_signalling()).count()
    }

    /// Control frames needed if uplink and downlink relays were chosen in two
    /// independent rounds of the same handshake.
    pub fn separate_selection_messages(&self) -> usize {
        2 * self.signalling_messages()
    }

    /// Checks the structural properties every trace must have. Returns a
    /// description of the first violation.
    pub fn check(&self, params: &SystemParams) -> std::result::Result<(), String> {
        let n = self.link_state.relay_count();
        let budget = params.radiated_budget();
        if self.gamma_set.iter().any(|&i| i >= n) {
            return Err("gamma contains an unknown relay".into());
        }
        if self.sigma_set.iter().any(|i| !self.gamma_set.contains(i)) {
            return Err("sigma is not a subset of gamma".into());
        }
        for &i in &self.gamma_set {
            if budget * self.link_state.h1[i] < self.threshold_gth1 {
                return Err(format!("R{i} in gamma violates g_th1"));
            }
        }
        for &i in &self.sigma_set {
            let (_, th) = self
                .threshold_gth2
                .iter()
                .find(|(j, _)| *j == i)
                .ok_or_else(|| format!("no g_th2 recorded for R{i}"))?;
            if budget * self.link_state.h2[i] < *th {
                return Err(format!("R{i} in sigma violates g_th2"));
            }
        }
        if let Some(i) = self.decision.relay_index {
            if !self.sigma_set.contains(&i) {
                return Err(format!("selected R{i} is not in sigma"));
            }
        }
        if let Some(p) = self.decision.energy_report.and_then(|r| r.link_powers) {
            if !p.is_feasible(params) {
                return Err("selected powers exceed the battery limit".into());
            }
        }
        let steps: Vec<u8> = self.message_log.iter().map(|m| m.step).collect();
        if steps.windows(2).any(|w| w[0] > w[1]) || steps.iter().any(|&s| !(1..=5).contains(&s)) {
            return Err(format!("message steps out of order: {steps:?}"));
        }
        let selections = self.message_log.iter().filter(|m| m.step == 4).count();
        if selections != 1 {
            return Err(format!("expected one selection broadcast, found {selections}"));
        }
        Ok(())
    }

    /// Line-oriented text rendering, one record per message.
    pub fn to_document(&self) -> String {
        let mut s = String::new();
        let ls = &self.link_state;
        let _ = writeln!(s, "relays = {}", ls.relay_count());
        let _ = writeln!(s, "zeta = {}", self.zeta);
        let _ = writeln!(s, "rate_r = {}", self.rate_r);
        let _ = writeln!(s, "h_direct = {:e}", ls.h_direct);
        for i in 0..ls.relay_count() {
            let _ = writeln!(s, "link R{i} h1 = {:e} h2 = {:e}", ls.h1[i], ls.h2[i]);
        }
        let _ = writeln!(s, "g_th1 = {:e}", self.threshold_gth1);
        for (i, th) in &self.threshold_gth2 {
            let _ = writeln!(s, "g_th2 R{i} = {th:e}");
        }
        let _ = writeln!(s, "gamma = {}", fmt_indices(&self.gamma_set));
        let _ = writeln!(s, "sigma = {}", fmt_indices(&self.sigma_set));
        for m in &self.message_log {
            let receivers: Vec<String> = m.receivers.iter().map(Node::to_string).collect();
            let _ = writeln!(
                s,
                "step {} | {} -> [{}] | {}",
                m.step,
                m.sender,
                receivers.join(","),
                m.payload
            );
        }
        let d = &self.decision;
        let _ = write!(s, "decision = {}", d.mode);
        if let Some(i) = d.relay_index {
            let _ = write!(s, " relay=R{i}");
        }
        if let Some(e) = d.energy_per_bit() {
            let _ = write!(s, " energy_per_bit_j={e:e}");
        }
        s.push('\n');
        let _ = writeln!(
            s,
            "signalling = {} (separate rounds: {})",
            self.signalling_messages(),
            self.separate_selection_messages()
        );
        s
    }
}

fn fmt_indices(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(|i| format!("R{i}")).collect();
    format!("{{{}}}", items.join(","))
}
