//! Maximum flow with real capacities (Dinic's algorithm).

/// Residual capacity at or below this is treated as saturated.
const SATURATED: f64 = 1e-15;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: f64,
    flow: f64,
}

#[derive(Clone, Debug)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    head: Vec<Vec<usize>>,
    level: Vec<i32>,
    cursor: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            arcs: Vec::new(),
            head: vec![Vec::new(); nodes],
            level: vec![0; nodes],
            cursor: vec![0; nodes],
        }
    }

    /// Adds an arc and returns its id (the paired reverse arc is `id ^ 1`).
    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, flow: 0.0 });
        self.arcs.push(Arc {
            to: from,
            cap: 0.0,
            flow: 0.0,
        });
        self.head[from].push(id);
        self.head[to].push(id + 1);
        id
    }

    pub fn flow_on(&self, arc: usize) -> f64 {
        self.arcs[arc].flow
    }

    fn residual(&self, a: usize) -> f64 {
        self.arcs[a].cap - self.arcs[a].flow
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        let mut queue = std::collections::VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &a in &self.head[v] {
                let w = self.arcs[a].to;
                if self.level[w] < 0 && self.residual(a) > SATURATED {
                    self.level[w] = self.level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        self.level[t] >= 0
    }

    fn push(&mut self, s: usize, t: usize, limit: f64) -> f64 {
        // iterative blocking-flow search along level-increasing arcs
        let mut path: Vec<usize> = Vec::new();
        let mut v = s;
        loop {
            if v == t {
                let mut amount = limit;
                for &a in &path {
                    amount = amount.min(self.residual(a));
                }
                for &a in &path {
                    self.arcs[a].flow += amount;
                    self.arcs[a ^ 1].flow -= amount;
                }
                return amount;
            }
            let mut advanced = false;
            while self.cursor[v] < self.head[v].len() {
                let a = self.head[v][self.cursor[v]];
                let w = self.arcs[a].to;
                if self.residual(a) > SATURATED && self.level[w] == self.level[v] + 1 {
                    path.push(a);
                    v = w;
                    advanced = true;
                    break;
                }
                self.cursor[v] += 1;
            }
            if !advanced {
                if v == s {
                    return 0.0;
                }
                // dead end: retreat and skip the arc that led here
                self.level[v] = -1;
                let a = path
                    .pop()
                    .expect("non-source node has an incoming path arc");
                v = self.arcs[a ^ 1].to;
                self.cursor[v] += 1;
            }
        }
    }

    /// Runs Dinic from `s` to `t` and returns the flow value.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while self.bfs(s, t) {
            self.cursor.fill(0);
            loop {
                let f = self.push(s, t, f64::INFINITY);
                if f <= SATURATED {
                    break;
                }
                total += f;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_network() {
        // CLRS example, max flow 23
        let mut n = FlowNetwork::new(6);
        for &(a, b, c) in &[
            (0, 1, 16.0),
            (0, 2, 13.0),
            (1, 3, 12.0),
            (2, 1, 4.0),
            (2, 4, 14.0),
            (3, 2, 9.0),
            (3, 5, 20.0),
            (4, 3, 7.0),
            (4, 5, 4.0),
        ] {
            n.add_arc(a, b, c);
        }
        assert!((n.max_flow(0, 5) - 23.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_capacities() {
        let mut n = FlowNetwork::new(4);
        let a = n.add_arc(0, 1, 0.25);
        n.add_arc(0, 2, 0.5);
        n.add_arc(1, 3, 1.0);
        n.add_arc(2, 3, 0.125);
        assert!((n.max_flow(0, 3) - 0.375).abs() < 1e-15);
        assert!((n.flow_on(a) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn disconnected_sink() {
        let mut n = FlowNetwork::new(3);
        n.add_arc(0, 1, 1.0);
        assert_eq!(n.max_flow(0, 2), 0.0);
    }
}
