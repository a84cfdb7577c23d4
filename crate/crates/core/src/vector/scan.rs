use super::VectorError;

/// Stage schedule of the pipelined Hillis-Steele scan: `log2(n)` shift-add
/// steps followed by one stage adding the carry from the previous batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanSteps {
    lanes: usize,
    shifts: Vec<usize>,
}

impl ScanSteps {
    pub fn new(lanes: usize) -> Result<Self, VectorError> {
        if lanes == 0 || !lanes.is_power_of_two() {
            return Err(VectorError::InvalidWidth(lanes));
        }
        let shifts = (0..lanes.trailing_zeros()).map(|d| 1usize << d).collect();
        Ok(ScanSteps { lanes, shifts })
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    /// Lane distances added at each shift-add step.
    pub fn shifts(&self) -> &[usize] {
        &self.shifts
    }

    /// Shift-add steps plus the carry stage.
    pub fn stage_count(&self) -> usize {
        self.shifts.len() + 1
    }

    /// Runs the scan over `lanes` in place and returns the new carry.
    pub fn run(&self, lanes: &mut [u32], carry: u32) -> u32 {
        assert_eq!(lanes.len(), self.lanes, "lane count mismatch");
        for &shift in &self.shifts {
            // Descending order reads each lane's pre-step value.
            for i in (shift..lanes.len()).rev() {
                lanes[i] = lanes[i].wrapping_add(lanes[i - shift]);
            }
        }
        for lane in lanes.iter_mut() {
            *lane = lane.wrapping_add(carry);
        }
        lanes[lanes.len() - 1]
    }
}

/// Inclusive prefix sum of one batch, offset by `carry`; returns the sums and
/// the carry for the next batch.
pub fn psum_exec(lanes: &[u32], carry: u32) -> Result<(Vec<u32>, u32), VectorError> {
    let steps = ScanSteps::new(lanes.len())?;
    let mut out = lanes.to_vec();
    let carry = steps.run(&mut out, carry);
    Ok((out, carry))
}
