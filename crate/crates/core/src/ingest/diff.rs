//! Added/deleted line counting for unified diffs.
//!
//! Counting is driven by the hunk headers: a hunk `@@ -a,b +c,d @@` owns
//! exactly `b` old-side and `d` new-side lines, so content lines that happen
//! to start with `+++` or `---` are still counted correctly. Binary file
//! sections contain no hunks and contribute nothing.

use thiserror::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DiffStats {
    pub added: u64,
    pub deleted: u64,
    pub hunks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("no hunks found")]
    NoHunks,
    #[error("line {0}: malformed hunk header")]
    MalformedHunkHeader(usize),
    #[error("line {0}: hunk body does not match its header counts")]
    HunkMismatch(usize),
}

/// True if `text` starts (after leading blank lines) with something a diff
/// tool would emit first.
pub fn has_diff_header(text: &str) -> bool {
    let first = text.lines().find(|l| !l.trim().is_empty());
    match first {
        Some(l) => {
            l.starts_with("diff ")
                || l.starts_with("--- ")
                || l.starts_with("Index: ")
                || l.starts_with("@@ -")
        }
        None => false,
    }
}

fn parse_range(s: &str) -> Option<u64> {
    // "12,5" or "12"; only the length matters here
    match s.split_once(',') {
        Some((start, len)) => {
            start.parse::<u64>().ok()?;
            len.parse().ok()
        }
        None => s.parse::<u64>().ok().map(|_| 1),
    }
}

fn parse_hunk_header(line: &str) -> Option<(u64, u64)> {
    let rest = line.strip_prefix("@@ -")?;
    let (ranges, _) = rest.split_once(" @@")?;
    let (old, new) = ranges.split_once(" +")?;
    Some((parse_range(old)?, parse_range(new)?))
}

fn is_binary_marker(line: &str) -> bool {
    line == "GIT binary patch" || (line.starts_with("Binary files ") && line.ends_with(" differ"))
}

/// Counts added and deleted lines across every hunk in `text`.
pub fn count_lines(text: &str) -> Result<DiffStats, DiffError> {
    let mut stats = DiffStats::default();
    let mut binary = false;
    let mut old_left = 0u64;
    let mut new_left = 0u64;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);

        if old_left > 0 || new_left > 0 {
            match line.as_bytes().first() {
                Some(b'+') if new_left > 0 => {
                    new_left -= 1;
                    stats.added += 1;
                }
                Some(b'-') if old_left > 0 => {
                    old_left -= 1;
                    stats.deleted += 1;
                }
                // context; some mailers strip the leading space of empty lines
                Some(b' ') | None if old_left > 0 && new_left > 0 => {
                    old_left -= 1;
                    new_left -= 1;
                }
                Some(b'\\') => {}
                _ => return Err(DiffError::HunkMismatch(lineno)),
            }
            continue;
        }

        if line.starts_with("@@ ") {
            let (old, new) =
                parse_hunk_header(line).ok_or(DiffError::MalformedHunkHeader(lineno))?;
            old_left = old;
            new_left = new;
            stats.hunks += 1;
        } else if is_binary_marker(line) {
            binary = true;
        }
    }

    // Trailing context lines are often trimmed by editors; missing +/- lines
    // are not recoverable.
    if old_left != new_left {
        return Err(DiffError::HunkMismatch(text.lines().count()));
    }
    if stats.hunks == 0 && !binary {
        return Err(DiffError::NoHunks);
    }
    Ok(stats)
}
