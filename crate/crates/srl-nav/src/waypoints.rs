use nalgebra::Vector2;

use crate::wrap_angle;

/// State of the waypoint mission at one query.
#[derive(Clone, Copy, Debug)]
pub struct WaypointStatus {
    /// Active waypoint (the last one once the mission is complete).
    pub target: Vector2<f64>,
    /// Euclidean distance to the active waypoint (m).
    pub d_wp: f64,
    /// Signed heading deviation toward the active waypoint (rad).
    pub psi_wp: f64,
    /// Set on the query that reached a waypoint.
    pub reached_now: bool,
    /// All waypoints reached.
    pub mission_complete: bool,
}

/// Sequential waypoint follower with a reach radius.
#[derive(Clone, Debug)]
pub struct WaypointTracker {
    waypoints: Vec<Vector2<f64>>,
    current: usize,
    reach_radius: f64,
    complete: bool,
}

impl WaypointTracker {
    pub fn new(waypoints: Vec<Vector2<f64>>, reach_radius: f64) -> Self {
        assert!(!waypoints.is_empty(), "waypoint list must not be empty");
        assert!(reach_radius > 0.0);
        Self {
            waypoints,
            current: 0,
            reach_radius,
            complete: false,
        }
    }

    pub fn current_index(&self) -> usize {
        self.current
    }

    pub fn reached_count(&self) -> usize {
        self.current + usize::from(self.complete)
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn target(&self) -> Vector2<f64> {
        self.waypoints[self.current]
    }

    /// Distance and heading deviation to the active waypoint, advancing
    /// to the next waypoint when within the reach radius.
    pub fn update(&mut self, pos: &Vector2<f64>, heading: f64) -> WaypointStatus {
        let target = self.waypoints[self.current];
        let delta = target - pos;
        let d_wp = delta.norm();
        let psi_wp = wrap_angle(delta.y.atan2(delta.x) - heading);
        let mut reached_now = false;
        if !self.complete && d_wp <= self.reach_radius {
            reached_now = true;
            if self.current + 1 < self.waypoints.len() {
                self.current += 1;
            } else {
                self.complete = true;
            }
        }
        WaypointStatus {
            target,
            d_wp,
            psi_wp,
            reached_now,
            mission_complete: self.complete,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn three_four_five_triangle() {
        let mut t = WaypointTracker::new(vec![Vector2::new(3.0, 4.0)], 0.3);
        let s = t.update(&Vector2::new(0.0, 0.0), 0.0);
        assert_relative_eq!(s.d_wp, 5.0, epsilon = 1e-12);
        assert_relative_eq!(s.psi_wp, 4.0_f64.atan2(3.0), epsilon = 1e-12);
        assert!(!s.reached_now);
    }

    #[test]
    fn reaching_advances_to_next() {
        let mut t = WaypointTracker::new(vec![Vector2::new(1.0, 0.0), Vector2::new(2.0, 0.0)], 0.3);
        let s = t.update(&Vector2::new(1.0, 0.1), 0.0);
        assert!(s.reached_now);
        assert_eq!(t.current_index(), 1);
        assert_eq!(t.reached_count(), 1);
        assert!(!s.mission_complete);
    }

    #[test]
    fn last_waypoint_completes_mission() {
        let mut t = WaypointTracker::new(vec![Vector2::new(1.0, 0.0)], 0.3);
        let s = t.update(&Vector2::new(0.9, 0.0), 0.0);
        assert!(s.reached_now);
        assert!(s.mission_complete);
        assert!(t.is_complete());
        assert_eq!(t.reached_count(), 1);
    }
}
