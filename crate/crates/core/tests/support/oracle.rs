//! Naive reference implementations used as test oracles. These are written
//! independently of the engine: straight transcriptions of the tick rules
//! with no shared helpers, favouring obviousness over speed.

use skirmish_core::roster::UnitTypeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaiveOrder {
    Idle,
    Move(i64, i64),
    Attack(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveUnit {
    pub id: u32,
    pub owner: u8,
    pub kind: u8,
    pub fx: i64,
    pub fy: i64,
    pub hp: i64,
    pub shield: i64,
    pub gcd: i64,
    pub acd: i64,
    pub order: NaiveOrder,
}

#[derive(Debug, Clone)]
pub struct NaiveWorld {
    pub tick: u64,
    pub w: i64,
    pub h: i64,
    pub max_frames: u64,
    pub units: Vec<NaiveUnit>,
    pub roster: Vec<UnitTypeSpec>,
    pub done: bool,
}

fn slow_sqrt(n: i64) -> i64 {
    // largest r with r*r <= n, by bisection
    let (mut lo, mut hi) = (0i64, 3_037_000_500i64);
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if (mid as i128) * (mid as i128) <= n as i128 {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

impl NaiveWorld {
    fn spec(&self, kind: u8) -> &UnitTypeSpec {
        self.roster.iter().find(|t| t.type_id == kind).unwrap()
    }

    fn px(v: i64) -> i64 {
        v.div_euclid(256)
    }

    fn step_toward(&self, fx: i64, fy: i64, tx: i64, ty: i64, speed: i64) -> (i64, i64) {
        let gx = tx * 256 + 128;
        let gy = ty * 256 + 128;
        let dx = gx - fx;
        let dy = gy - fy;
        let (mut nx, mut ny);
        if dx * dx + dy * dy <= speed * speed {
            nx = gx;
            ny = gy;
        } else {
            let d = slow_sqrt(dx * dx + dy * dy);
            // truncating division toward zero
            nx = fx + (dx * speed) / d;
            ny = fy + (dy * speed) / d;
        }
        if nx < 0 { nx = 0; }
        if ny < 0 { ny = 0; }
        if nx > self.w * 256 - 1 { nx = self.w * 256 - 1; }
        if ny > self.h * 256 - 1 { ny = self.h * 256 - 1; }
        (nx, ny)
    }

    pub fn tick(&mut self) {
        if self.done {
            return;
        }
        // (1)
        for u in self.units.iter_mut() {
            if u.gcd > 0 { u.gcd -= 1; }
            if u.acd > 0 { u.acd -= 1; }
        }
        // (2)
        let mut ids: Vec<u32> = self.units.iter().map(|u| u.id).collect();
        ids.sort();
        for &id in &ids {
            let i = self.units.iter().position(|u| u.id == id).unwrap();
            if let NaiveOrder::Move(tx, ty) = self.units[i].order {
                let speed = self.spec(self.units[i].kind).speed_fp as i64;
                let (nx, ny) = self.step_toward(self.units[i].fx, self.units[i].fy, tx, ty, speed);
                self.units[i].fx = nx;
                self.units[i].fy = ny;
                if nx == tx * 256 + 128 && ny == ty * 256 + 128 {
                    self.units[i].order = NaiveOrder::Idle;
                }
            }
        }
        // (3)
        let mut hits: Vec<(u32, i64, bool)> = Vec::new(); // (target, raw, unused)
        for &id in &ids {
            let i = self.units.iter().position(|u| u.id == id).unwrap();
            let NaiveOrder::Attack(t) = self.units[i].order else { continue };
            let Some(j) = self.units.iter().position(|u| u.id == t) else {
                self.units[i].order = NaiveOrder::Idle;
                continue;
            };
            let a = self.spec(self.units[i].kind).clone();
            let tflyer = self.spec(self.units[j].kind).flyer;
            let (dmg, range, cd_const) = if tflyer {
                (a.air_weapon.damage, a.air_weapon.range, a.air_weapon.cooldown)
            } else {
                (a.ground_weapon.damage, a.ground_weapon.range, a.ground_weapon.cooldown)
            };
            let ax = Self::px(self.units[i].fx);
            let ay = Self::px(self.units[i].fy);
            let tx = Self::px(self.units[j].fx);
            let ty = Self::px(self.units[j].fy);
            let d2 = (ax - tx) * (ax - tx) + (ay - ty) * (ay - ty);
            let in_range = dmg > 0 && d2 <= (range as i64) * (range as i64);
            if !in_range {
                let (nx, ny) = self.step_toward(self.units[i].fx, self.units[i].fy, tx, ty, a.speed_fp as i64);
                self.units[i].fx = nx;
                self.units[i].fy = ny;
                continue;
            }
            let cd = if tflyer { &mut self.units[i].acd } else { &mut self.units[i].gcd };
            if *cd == 0 {
                *cd = cd_const as i64;
                hits.push((t, dmg as i64, false));
            }
        }
        // (4)
        for (t, raw, _) in hits {
            let j = self.units.iter().position(|u| u.id == t).unwrap();
            let armor = self.spec(self.units[j].kind).armor as i64;
            let s = std::cmp::min(self.units[j].shield, raw);
            let left = raw - s;
            let mut d = if left == 0 { 0 } else { std::cmp::max(1, left - armor) };
            if d > self.units[j].hp { d = self.units[j].hp; }
            self.units[j].shield -= s;
            self.units[j].hp -= d;
        }
        self.units.retain(|u| u.hp > 0);
        // (5)
        self.tick += 1;
        // (6)
        let p0 = self.units.iter().any(|u| u.owner == 0);
        let p1 = self.units.iter().any(|u| u.owner == 1);
        if !p0 || !p1 || self.tick >= self.max_frames {
            self.done = true;
        }
    }
}

/// Brute-force fog check over every (enemy, friend) pair.
pub fn naive_visible(
    units: &[(u8, u32, i32, i32, i32)], // (owner, id, type, x, y)
    observer: u8,
    roster: &[UnitTypeSpec],
    fog: bool,
) -> std::collections::BTreeSet<u32> {
    let mut out = std::collections::BTreeSet::new();
    for e in units {
        if e.0 == observer {
            continue;
        }
        if !fog {
            out.insert(e.1);
            continue;
        }
        for f in units {
            if f.0 != observer {
                continue;
            }
            let sight = roster.iter().find(|t| t.type_id as i32 == f.2).unwrap().sight_range as i64;
            let dx = (e.3 - f.3) as i64;
            let dy = (e.4 - f.4) as i64;
            if dx * dx + dy * dy <= sight * sight {
                out.insert(e.1);
                break;
            }
        }
    }
    out
}
