//! Closed-form sizes of the hidden-state and observation spaces.

use num_bigint::BigUint;

use super::EnvError;

fn check(n_objects: u32, n_static: u32) -> Result<(), EnvError> {
    if n_static > n_objects {
        return Err(EnvError::InvalidArgument(format!(
            "n_static ({n_static}) exceeds n_objects ({n_objects})"
        )));
    }
    Ok(())
}

/// `n_rooms ^ (n_objects - n_static)`: every movable object sits in one room.
pub fn count_hidden_states(n_rooms: u32, n_objects: u32, n_static: u32) -> Result<BigUint, EnvError> {
    check(n_objects, n_static)?;
    Ok(BigUint::from(n_rooms).pow(n_objects - n_static))
}

/// `2 ^ (n_objects - n_static) * n_rooms`: which movable objects are visible,
/// times the room the agent stands in.
pub fn count_observations(n_rooms: u32, n_objects: u32, n_static: u32) -> Result<BigUint, EnvError> {
    check(n_objects, n_static)?;
    Ok(BigUint::from(2u32).pow(n_objects - n_static) * BigUint::from(n_rooms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_two_room_example() {
        let states = count_hidden_states(32, 25, 8).unwrap();
        assert_eq!(states, BigUint::from(2u32).pow(85));
        assert_eq!(states.to_string(), "38685626227668133590597632");
        let obs = count_observations(32, 25, 4).unwrap();
        assert_eq!(obs, BigUint::from(67_108_864u64));
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(count_hidden_states(7, 4, 4).unwrap(), BigUint::from(1u32));
        assert_eq!(count_observations(5, 2, 2).unwrap(), BigUint::from(5u32));
        assert!(count_hidden_states(2, 1, 2).is_err());
        assert!(count_observations(2, 1, 2).is_err());
    }

    fn enumerate_placements(rooms: u32, movable: u32) -> u64 {
        // odometer over room assignments
        let mut count = 0;
        let mut digits = vec![0u32; movable as usize];
        loop {
            count += 1;
            let mut i = 0;
            loop {
                if i == digits.len() {
                    return count;
                }
                digits[i] += 1;
                if digits[i] < rooms {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }

    fn enumerate_views(rooms: u32, movable: u32) -> u64 {
        let mut views = std::collections::HashSet::new();
        for room in 0..rooms {
            for mask in 0..(1u32 << movable) {
                views.insert((room, mask));
            }
        }
        views.len() as u64
    }

    #[test]
    fn small_instances_match_enumeration() {
        assert_eq!(enumerate_placements(2, 2), 4);
        assert_eq!(count_hidden_states(2, 3, 1).unwrap(), BigUint::from(enumerate_placements(2, 2)));
        assert_eq!(enumerate_views(2, 2), 8);
        assert_eq!(count_observations(2, 2, 0).unwrap(), BigUint::from(enumerate_views(2, 2)));
        for rooms in 1..4 {
            for movable in 0..4 {
                assert_eq!(
                    count_hidden_states(rooms, movable + 1, 1).unwrap(),
                    BigUint::from(enumerate_placements(rooms, movable))
                );
            }
        }
    }
}
