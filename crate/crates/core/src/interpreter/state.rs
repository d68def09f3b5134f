//! Runtime configurations.

use std::collections::VecDeque;

use super::program::Value;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Process {
    /// The future this process resolves.
    pub fut: usize,
    pub method: usize,
    pub locals: Vec<Value>,
    pub pc: usize,
    pub started: bool,
    pub stuck: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Object {
    pub class: usize,
    pub fields: Vec<Value>,
    /// Running, blocked on a get, or stuck.
    pub active: Option<Process>,
    /// New and suspended processes, in arrival order.
    pub pool: Vec<Process>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Config {
    pub objects: Vec<Object>,
    pub futures: Vec<Option<Value>>,
}

impl Config {
    pub fn resolved(&self, fut: usize) -> Option<Value> {
        self.futures.get(fut).copied().flatten()
    }

    /// Whether any process is left that has not returned.
    pub fn has_pending(&self) -> bool {
        self.objects
            .iter()
            .any(|o| o.active.is_some() || !o.pool.is_empty())
    }

    pub fn stuck(&self) -> impl Iterator<Item = &str> {
        self.objects
            .iter()
            .filter_map(|o| o.active.as_ref().and_then(|p| p.stuck.as_deref()))
    }

    /// Copy with object and future ids renamed in breadth-first discovery
    /// order, starting from the first `roots` objects and future 0.
    pub fn canonical(&self, roots: usize) -> Config {
        let mut obj_map = vec![usize::MAX; self.objects.len()];
        let mut fut_map = vec![usize::MAX; self.futures.len()];
        let mut obj_order = Vec::with_capacity(self.objects.len());
        let mut fut_count = 0;
        let mut queue = VecDeque::new();

        let mut see_fut = |k: usize, fut_map: &mut Vec<usize>| {
            if fut_map[k] == usize::MAX {
                fut_map[k] = fut_count;
                fut_count += 1;
            }
        };
        if !self.futures.is_empty() {
            see_fut(0, &mut fut_map);
        }
        for (k, slot) in obj_map.iter_mut().enumerate().take(roots) {
            *slot = obj_order.len();
            obj_order.push(k);
            queue.push_back(k);
        }
        let mut next_root = 0;
        loop {
            while let Some(o) = queue.pop_front() {
                let obj = &self.objects[o];
                let procs = obj.active.iter().chain(obj.pool.iter());
                let values = obj
                    .fields
                    .iter()
                    .chain(procs.flat_map(|p| p.locals.iter()))
                    .copied()
                    .collect::<Vec<_>>();
                for p in obj.active.iter().chain(obj.pool.iter()) {
                    see_fut(p.fut, &mut fut_map);
                }
                for v in values {
                    match v {
                        Value::Obj(k) if obj_map[k] == usize::MAX => {
                            obj_map[k] = obj_order.len();
                            obj_order.push(k);
                            queue.push_back(k);
                        }
                        Value::Fut(k) => see_fut(k, &mut fut_map),
                        _ => {}
                    }
                }
            }
            while next_root < self.objects.len() && obj_map[next_root] != usize::MAX {
                next_root += 1;
            }
            if next_root == self.objects.len() {
                break;
            }
            obj_map[next_root] = obj_order.len();
            obj_order.push(next_root);
            queue.push_back(next_root);
        }
        for k in 0..self.futures.len() {
            see_fut(k, &mut fut_map);
        }

        let rename = |v: Value| match v {
            Value::Obj(k) => Value::Obj(obj_map[k]),
            Value::Fut(k) => Value::Fut(fut_map[k]),
            v => v,
        };
        let proc = |p: &Process| Process {
            fut: fut_map[p.fut],
            locals: p.locals.iter().map(|v| rename(*v)).collect(),
            ..p.clone()
        };
        let objects = obj_order
            .iter()
            .map(|&k| {
                let o = &self.objects[k];
                Object {
                    class: o.class,
                    fields: o.fields.iter().map(|v| rename(*v)).collect(),
                    active: o.active.as_ref().map(proc),
                    pool: o.pool.iter().map(proc).collect(),
                }
            })
            .collect();
        let mut futures = vec![None; self.futures.len()];
        for (k, v) in self.futures.iter().enumerate() {
            futures[fut_map[k]] = v.map(rename);
        }
        Config { objects, futures }
    }
}
