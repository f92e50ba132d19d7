//! Live simulation service over WebSocket.
//!
//! Threads:
//!
//! * the control loop owns the [`Simulation`] and steps it on a fixed tick;
//! * an accept thread performs handshakes;
//! * one thread per client moves queued lines out and client lines in.
//!
//! The control loop never waits on a client. Outgoing messages go through
//! a bounded per-client queue that discards its oldest entry when full;
//! incoming messages arrive over a channel and are drained once per tick.

use std::collections::VecDeque;
use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crossbeam_channel::{Receiver, Sender};
use echoflow_core::controller::VelocityCommand;
use echoflow_core::masks::union_mask;
use echoflow_core::scenario::{Scenario, ScenarioFile};
use echoflow_core::sim::{Simulation, StepRecord};
use echoflow_core::sonar::SonarMode;
use echoflow_core::Result;
use log::{debug, info, warn};
use tungstenite::{Message, WebSocket};

use crate::wire::{
    downsample, downsample_mask, AckMessage, ConfigMessage, ControlAction, ControlMessage, StateMessage,
    WireMasks, WireMessage, WirePose, WireSensor,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ServeOptions {
    /// Control period; 100 ms is real time.
    pub tick: Duration,
    /// Outgoing messages buffered per client before the oldest is dropped.
    pub queue_capacity: usize,
    /// Where `select_scenario` looks for `<name>.json`.
    pub scenario_dir: Option<PathBuf>,
    pub fast_sonar: bool,
    pub seed: u64,
    pub start_paused: bool,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            tick: Duration::from_millis(100),
            queue_capacity: 32,
            scenario_dir: None,
            fast_sonar: false,
            seed: 0,
            start_paused: false,
        }
    }
}

/// Bounded drop-oldest line queue.
#[derive(Debug)]
pub struct ClientQueue {
    lines: Mutex<VecDeque<String>>,
    capacity: usize,
    dropped: AtomicU64,
    closed: AtomicBool,
}

impl ClientQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            lines: Mutex::new(VecDeque::with_capacity(capacity)),
            capacity: capacity.max(1),
            dropped: AtomicU64::new(0),
            closed: AtomicBool::new(false),
        }
    }

    pub fn push(&self, line: String) {
        let mut q = self.lines.lock().expect("queue lock");
        while q.len() >= self.capacity {
            q.pop_front();
            self.dropped.fetch_add(1, Ordering::Relaxed);
        }
        q.push_back(line);
    }

    pub fn pop(&self) -> Option<String> {
        self.lines.lock().expect("queue lock").pop_front()
    }

    pub fn drain(&self) -> Vec<String> {
        self.lines.lock().expect("queue lock").drain(..).collect()
    }

    pub fn len(&self) -> usize {
        self.lines.lock().expect("queue lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }

    pub fn close(&self) {
        self.closed.store(true, Ordering::Relaxed);
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::Relaxed)
    }
}

struct Client {
    id: u64,
    queue: Arc<ClientQueue>,
}

type Clients = Arc<Mutex<Vec<Client>>>;

pub struct Server {
    listener: TcpListener,
    scenario: ScenarioFile,
    options: ServeOptions,
}

/// A server running on background threads.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::Relaxed);
        for t in self.threads {
            let _ = t.join();
        }
    }
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, scenario: ScenarioFile, options: ServeOptions) -> Result<Self> {
        // Fail early on a bad scenario rather than on the first tick.
        prepare(&scenario, &options)?;
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            scenario,
            options,
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Starts the accept and control threads and returns immediately.
    pub fn spawn(self) -> Result<ServerHandle> {
        let addr = self.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let clients: Clients = Arc::new(Mutex::new(Vec::new()));
        let (tx, rx) = crossbeam_channel::unbounded();
        let mut control = ControlLoop::new(self.scenario, self.options.clone(), clients.clone(), rx)?;
        let config_line = control.config_line.clone();
        self.listener.set_nonblocking(true)?;

        let accept = {
            let stop = stop.clone();
            let listener = self.listener;
            let capacity = self.options.queue_capacity;
            thread::spawn(move || accept_loop(listener, clients, tx, config_line, capacity, stop))
        };
        let run = {
            let stop = stop.clone();
            thread::spawn(move || control.run(&stop))
        };
        info!("serving on ws://{addr}");
        Ok(ServerHandle {
            addr,
            stop,
            threads: vec![accept, run],
        })
    }

    /// Serves until the process is killed.
    pub fn run(self) -> Result<()> {
        let handle = self.spawn()?;
        for t in handle.threads {
            let _ = t.join();
        }
        Ok(())
    }
}

fn prepare(file: &ScenarioFile, options: &ServeOptions) -> Result<Scenario> {
    let mut file = file.clone();
    if options.fast_sonar {
        file.sonar.mode = SonarMode::Fast;
    }
    file.to_scenario()
}

fn config_message(s: &Scenario) -> WireMessage {
    let grid = s.sonar.grid;
    let layer = |regions: &[_]| {
        s.sensors
            .iter()
            .map(|p| downsample_mask(&union_mask(regions, p, &grid)))
            .collect()
    };
    WireMessage::Config(ConfigMessage {
        scenario: s.name.clone(),
        dt: s.sim.dt,
        v_max: s.sim.v_max,
        omega_max: s.sim.omega_max,
        robot_radius: s.sim.robot_radius,
        segments: s.world.segments().to_vec(),
        circles: s.world.static_circles().to_vec(),
        waypoints: s.plan.waypoints.clone(),
        sensors: s
            .sensors
            .iter()
            .map(|p| WireSensor {
                x: p.position().x,
                y: p.position().y,
                heading: p.heading(),
            })
            .collect(),
        masks: WireMasks {
            ca: layer(&s.regions.ca),
            oa: layer(&s.regions.oa),
            rcf: layer(&s.regions.rcf),
        },
    })
}

struct ControlLoop {
    sim: Simulation,
    options: ServeOptions,
    clients: Clients,
    inbox: Receiver<(u64, WireMessage)>,
    paused: bool,
    command: VelocityCommand,
    seq: u64,
    config_line: Arc<Mutex<String>>,
}

impl ControlLoop {
    fn new(file: ScenarioFile, options: ServeOptions, clients: Clients, inbox: Receiver<(u64, WireMessage)>) -> Result<Self> {
        let scenario = prepare(&file, &options)?;
        let sim = Simulation::new(&scenario, options.seed)?;
        let config_line = Arc::new(Mutex::new(config_message(&scenario).to_line()));
        Ok(Self {
            sim,
            paused: options.start_paused,
            options,
            clients,
            inbox,
            command: VelocityCommand::ZERO,
            seq: 0,
            config_line,
        })
    }

    fn run(&mut self, stop: &AtomicBool) {
        let mut next = Instant::now();
        while !stop.load(Ordering::Relaxed) {
            self.tick();
            next += self.options.tick;
            let now = Instant::now();
            if next > now {
                thread::sleep(next - now);
            } else {
                next = now;
            }
        }
    }

    fn tick(&mut self) {
        for (id, msg) in self.inbox.try_iter().collect::<Vec<_>>() {
            self.handle(id, msg);
        }
        if self.paused || self.sim.is_finished() {
            return;
        }
        match self.sim.step(Some(self.command)) {
            Ok(rec) => {
                let line = self.state_message(&rec).to_line();
                self.broadcast(line);
            }
            Err(e) => {
                warn!("step failed: {e}");
                self.paused = true;
                self.broadcast(WireMessage::error(format!("simulation halted: {e}")).to_line());
            }
        }
    }

    fn handle(&mut self, client: u64, msg: WireMessage) {
        match msg {
            // Latest wins: later commands in the same tick overwrite earlier ones.
            WireMessage::Command(c) => self.command = VelocityCommand::new(c.v, c.omega),
            WireMessage::Control(c) => match self.control(&c) {
                Ok(()) => self.send_to(
                    client,
                    WireMessage::Ack(AckMessage {
                        action: c.action,
                        scenario: c.scenario.clone(),
                    }),
                ),
                Err(e) => self.send_to(client, WireMessage::error(e)),
            },
            other => self.send_to(
                client,
                WireMessage::error(format!("clients may not send {:?} messages", kind(&other))),
            ),
        }
    }

    fn control(&mut self, c: &ControlMessage) -> std::result::Result<(), String> {
        match c.action {
            ControlAction::Start => self.paused = false,
            ControlAction::Pause => self.paused = true,
            ControlAction::Reset => {
                self.sim.reset(self.options.seed).map_err(|e| e.to_string())?;
                self.command = VelocityCommand::ZERO;
                self.broadcast_config();
            }
            ControlAction::SelectScenario => {
                let name = c.scenario.as_deref().ok_or("select_scenario needs a scenario name")?;
                if name.is_empty() || !name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-') {
                    return Err(format!("invalid scenario name {name:?}"));
                }
                let dir = self.options.scenario_dir.as_ref().ok_or("no scenario directory configured")?;
                let file = ScenarioFile::load(dir.join(format!("{name}.json"))).map_err(|e| format!("{name}: {e}"))?;
                let scenario = prepare(&file, &self.options).map_err(|e| format!("{name}: {e}"))?;
                self.sim = Simulation::new(&scenario, self.options.seed).map_err(|e| e.to_string())?;
                self.command = VelocityCommand::ZERO;
                self.broadcast_config();
            }
        }
        Ok(())
    }

    fn broadcast_config(&mut self) {
        let line = config_message(self.sim.scenario()).to_line();
        *self.config_line.lock().expect("config lock") = line.clone();
        self.broadcast(line);
    }

    fn state_message(&mut self, rec: &StepRecord) -> WireMessage {
        self.seq += 1;
        let s = &rec.sample;
        WireMessage::State(StateMessage {
            seq: self.seq,
            step: rec.step,
            t: s.t,
            scenario: self.sim.scenario().name.clone(),
            paused: self.paused,
            pose: WirePose {
                x: s.x,
                y: s.y,
                yaw: s.yaw,
            },
            input: VelocityCommand::new(s.v_i, s.omega_i),
            output: VelocityCommand::new(s.v_o, s.omega_o),
            layer: s.layer,
            termination: rec.termination,
            goal_reached: self.sim.guidance().goal_reached,
            collision: rec.collision.as_ref().map(|c| c.entity.clone()),
            dynamic: self.sim.world().dynamic_circles(),
            energyscapes: self.sim.energies().iter().map(downsample).collect(),
        })
    }

    fn broadcast(&self, line: String) {
        let mut clients = self.clients.lock().expect("clients lock");
        clients.retain(|c| !c.queue.is_closed());
        for c in clients.iter() {
            c.queue.push(line.clone());
        }
    }

    fn send_to(&self, id: u64, msg: WireMessage) {
        let clients = self.clients.lock().expect("clients lock");
        if let Some(c) = clients.iter().find(|c| c.id == id) {
            c.queue.push(msg.to_line());
        }
    }
}

fn kind(m: &WireMessage) -> &'static str {
    match m {
        WireMessage::State(_) => "state",
        WireMessage::Command(_) => "command",
        WireMessage::Control(_) => "control",
        WireMessage::Config(_) => "config",
        WireMessage::Ack(_) => "ack",
        WireMessage::Error(_) => "error",
    }
}

fn accept_loop(
    listener: TcpListener,
    clients: Clients,
    inbox: Sender<(u64, WireMessage)>,
    config_line: Arc<Mutex<String>>,
    capacity: usize,
    stop: Arc<AtomicBool>,
) {
    let mut next_id = 0u64;
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let _ = stream.set_nonblocking(false);
                let ws = match tungstenite::accept(stream) {
                    Ok(ws) => ws,
                    Err(e) => {
                        debug!("handshake with {peer} failed: {e}");
                        continue;
                    }
                };
                let timeout = Some(Duration::from_millis(5));
                if ws.get_ref().set_read_timeout(timeout).is_err() || ws.get_ref().set_write_timeout(timeout).is_err() {
                    continue;
                }
                next_id += 1;
                let queue = Arc::new(ClientQueue::new(capacity));
                queue.push(config_line.lock().expect("config lock").clone());
                clients.lock().expect("clients lock").push(Client {
                    id: next_id,
                    queue: queue.clone(),
                });
                info!("client {next_id} connected from {peer}");
                let inbox = inbox.clone();
                let stop = stop.clone();
                let id = next_id;
                // Workers notice `stop` within one timeout and exit on their own.
                thread::spawn(move || client_loop(id, ws, queue, inbox, stop));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(10)),
            Err(e) => {
                warn!("accept failed: {e}");
                thread::sleep(Duration::from_millis(10));
            }
        }
    }
}

fn is_timeout(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut))
}

fn client_loop(
    id: u64,
    mut ws: WebSocket<TcpStream>,
    queue: Arc<ClientQueue>,
    inbox: Sender<(u64, WireMessage)>,
    stop: Arc<AtomicBool>,
) {
    // A frame the socket did not accept yet; nothing more is written until it
    // drains, so a stalled client only ever loses queued lines.
    let mut pending = false;
    'outer: while !stop.load(Ordering::Relaxed) {
        if pending {
            match ws.flush() {
                Ok(()) => pending = false,
                Err(e) if is_timeout(&e) => {}
                Err(_) => break,
            }
        }
        while !pending {
            let Some(line) = queue.pop() else { break };
            match ws.send(Message::text(line)) {
                Ok(()) => {}
                Err(e) if is_timeout(&e) => pending = true,
                Err(_) => break 'outer,
            }
        }
        match ws.read() {
            Ok(Message::Text(text)) => {
                for line in text.as_str().lines().filter(|l| !l.trim().is_empty()) {
                    match WireMessage::parse(line) {
                        Ok(msg) => {
                            if inbox.send((id, msg)).is_err() {
                                break 'outer;
                            }
                        }
                        Err(e) => queue.push(WireMessage::error(format!("malformed message: {e}")).to_line()),
                    }
                }
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(e) => {
                debug!("client {id}: {e}");
                break;
            }
        }
    }
    queue.close();
    let _ = ws.close(None);
    let _ = ws.flush();
    info!("client {id} disconnected");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queue_drops_oldest() {
        let q = ClientQueue::new(3);
        for k in 0..5 {
            q.push(k.to_string());
        }
        assert_eq!(q.dropped(), 2);
        assert_eq!(q.drain(), ["2", "3", "4"]);
        assert!(q.is_empty());
    }

    #[test]
    fn layer_names_on_the_wire() {
        use echoflow_core::controller::Layer;
        assert_eq!(serde_json::to_string(&Layer::Aff).unwrap(), "\"AFF\"");
    }
}
