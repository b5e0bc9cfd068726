use super::MeshError;

fn levels_ok(s: &str) -> bool {
    !s.is_empty() && s.split('/').all(|l| !l.is_empty())
}

/// Publish topics: non-empty levels, no wildcards.
pub fn validate_topic(topic: &str) -> Result<(), MeshError> {
    if !levels_ok(topic) {
        return Err(MeshError::InvalidTopic(topic.into(), "empty level"));
    }
    if topic.contains(['+', '#']) {
        return Err(MeshError::InvalidTopic(topic.into(), "wildcard in publish topic"));
    }
    Ok(())
}

pub fn validate_filter(filter: &str) -> Result<(), MeshError> {
    if !levels_ok(filter) {
        return Err(MeshError::InvalidFilter(filter.into(), "empty level"));
    }
    let levels: Vec<&str> = filter.split('/').collect();
    for (i, level) in levels.iter().enumerate() {
        match *level {
            "#" if i + 1 != levels.len() => {
                return Err(MeshError::InvalidFilter(filter.into(), "'#' must be the last level"))
            }
            "#" | "+" => {}
            l if l.contains(['+', '#']) => {
                return Err(MeshError::InvalidFilter(filter.into(), "wildcard must occupy a whole level"))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Level-wise match: `+` is exactly one level, a trailing `#` zero or more.
pub fn matches(filter: &str, topic: &str) -> Result<bool, MeshError> {
    validate_filter(filter)?;
    validate_topic(topic)?;
    let mut t = topic.split('/');
    for f in filter.split('/') {
        match f {
            "#" => return Ok(true),
            "+" => {
                if t.next().is_none() {
                    return Ok(false);
                }
            }
            lit => {
                if t.next() != Some(lit) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(t.next().is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn invalid_filters() {
        for f in ["", "a//b", "a/#/b", "a/b#", "a+/b", "/a", "a/"] {
            assert!(validate_filter(f).is_err(), "{f}");
        }
        for t in ["a/+", "a/#", "", "a//b"] {
            assert!(validate_topic(t).is_err(), "{t}");
        }
        assert!(matches("a/#/b", "a/x/b").is_err());
    }

    fn level() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["home", "kitchen", "gas", "user", "a", "b"]).prop_map(String::from)
    }

    proptest! {
        #[test]
        fn literal_filter_matches_only_itself(a in prop::collection::vec(level(), 1..5), b in prop::collection::vec(level(), 1..5)) {
            let (ta, tb) = (a.join("/"), b.join("/"));
            prop_assert_eq!(matches(&ta, &tb).unwrap(), ta == tb);
            prop_assert!(matches("#", &ta).unwrap());
            let plus = vec!["+"; a.len()].join("/");
            prop_assert!(matches(&plus, &ta).unwrap());
            prop_assert_eq!(matches(&plus, &tb).unwrap(), a.len() == b.len());
        }
    }
}
