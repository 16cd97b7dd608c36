//! Two-agent fungibility frontier.
//!
//! When the donor holds `s` and hands over `ds`, the recipient gains
//! `rate(s) ds` with `rate(s) = min(1, (s / cbar)^p)`: below the threshold
//! `cbar` part of the transfer is lost, above it transfers are frictionless,
//! and a donor with no capital cannot transfer at all. Writing the curve in
//! the donor coordinate turns the singular slope `-(cbar / s)^p` into the
//! bounded integrand `rate`, so the integration needs no special handling at
//! the zero-capital end.

/// Recipient gain per unit given up by a donor holding `s`.
pub fn rate(s: f64, cbar: f64, p: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= cbar {
        1.0
    } else {
        (s / cbar).powf(p)
    }
}

/// `∫_0^s rate`, in closed form.
fn cumulative(s: f64, cbar: f64, p: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s <= cbar {
        s.powf(p + 1.0) / ((p + 1.0) * cbar.powf(p))
    } else {
        cbar / (p + 1.0) + (s - cbar)
    }
}

/// Recipient gain when the donor goes from `start` down to `s` (`s <= start`).
pub fn gain(start: f64, s: f64, cbar: f64, p: f64) -> f64 {
    cumulative(start, cbar, p) - cumulative(s, cbar, p)
}

/// Integrates the recipient's position with classical RK4 while the donor
/// runs from `start` down to 0. Returns `(donor, recipient)` pairs, starting
/// at `(start, recipient_start)`. The step grid is split at `cbar` so each
/// step sees a smooth integrand.
pub fn integrate_branch(start: f64, recipient_start: f64, cbar: f64, p: f64, steps: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(start, recipient_start)];
    if start <= 0.0 {
        return out;
    }
    let steps = steps.max(2);
    let mut segments: Vec<(f64, f64, usize)> = Vec::new();
    if start > cbar {
        let upper_len = start - cbar;
        let share = ((steps as f64) * upper_len / start).round() as usize;
        let upper_steps = share.clamp(1, steps - 1);
        segments.push((start, cbar, upper_steps));
        segments.push((cbar, 0.0, steps - upper_steps));
    } else {
        segments.push((start, 0.0, steps));
    }

    let f = |s: f64| rate(s, cbar, p);
    let mut y = recipient_start;
    for (from, to, count) in segments {
        let h = (from - to) / count as f64;
        for k in 0..count {
            let s = from - k as f64 * h;
            // dy/d(-s) = rate(s): stepping the donor down by h
            let k1 = f(s);
            let k2 = f(s - 0.5 * h);
            let k3 = k2;
            let k4 = f(s - h);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let next = if k + 1 == count { to } else { from - (k + 1) as f64 * h };
            out.push((next, y));
        }
    }
    out
}

/// Donor level maximising `w_recipient * gain + w_donor * s` over `[0, start]`.
pub fn best_donor_level(start: f64, w_donor: f64, w_recipient: f64, cbar: f64, p: f64) -> f64 {
    if start <= 0.0 {
        return start;
    }
    if w_recipient <= 0.0 {
        return start;
    }
    let ratio = w_donor / w_recipient;
    if ratio >= 1.0 {
        return start;
    }
    // stationary point of the concave objective: rate(s) = ratio
    (cbar * ratio.powf(1.0 / p)).min(start)
}

/// Finds `s` in `[0, start]` where the monotone `g(s)` crosses `target`;
/// `g` must be decreasing in `s`.
pub fn solve_decreasing(start: f64, target: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, start);
    if g(hi) >= target {
        return hi;
    }
    if g(lo) <= target {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
