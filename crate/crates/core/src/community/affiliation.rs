use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::Partition;
use crate::error::{Error, Result};

/// Binary user-community membership matrix stored as sorted rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffiliationMatrix {
    rows: Vec<Vec<u32>>,
    community_count: usize,
}

impl AffiliationMatrix {
    pub fn from_rows(mut rows: Vec<Vec<u32>>, community_count: usize) -> Result<Self> {
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            if let Some(&c) = row.last() {
                if c as usize >= community_count {
                    return Err(Error::OutOfRange {
                        what: "community",
                        id: c as usize,
                        limit: community_count,
                    });
                }
            }
        }
        Ok(AffiliationMatrix {
            rows,
            community_count,
        })
    }

    /// One membership per user. Users without a community get an empty row.
    pub fn from_partition(partition: &Partition) -> Self {
        AffiliationMatrix {
            rows: partition
                .assignment()
                .iter()
                .map(|c| c.iter().copied().collect())
                .collect(),
            community_count: partition.community_count(),
        }
    }

    /// Each user is the sole member of its own community.
    pub fn identity(users: usize) -> Self {
        AffiliationMatrix {
            rows: (0..users as u32).map(|u| vec![u]).collect(),
            community_count: users,
        }
    }

    pub fn user_count(&self) -> usize {
        self.rows.len()
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn communities_of(&self, user: usize) -> &[u32] {
        &self.rows[user]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, user: usize, community: u32) -> bool {
        self.rows[user].binary_search(&community).is_ok()
    }

    /// Transpose: sorted member lists per community.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.community_count];
        for (u, row) in self.rows.iter().enumerate() {
            for &c in row {
                out[c as usize].push(u as u32);
            }
        }
        out
    }

    /// Count of users by number of memberships; index `k` holds the number
    /// of users in exactly `k` communities.
    pub fn overlap_histogram(&self) -> Vec<usize> {
        let max = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut hist = vec![0; max + 1];
        for row in &self.rows {
            hist[row.len()] += 1;
        }
        hist
    }

    /// Writes a `# users <m> communities <C>` header followed by one
    /// `user_id c1 c2 ...` line per user.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "# users {} communities {}", self.rows.len(), self.community_count).map_err(io)?;
        for (u, row) in self.rows.iter().enumerate() {
            write!(out, "{u}").map_err(io)?;
            for c in row {
                write!(out, " {c}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut declared: Option<(usize, usize)> = None;
        let mut rows: Vec<Vec<u32>> = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim();
            let malformed = |reason: String| Error::Malformed {
                path: path.to_path_buf(),
                line: idx + 1,
                reason,
            };
            if let Some(header) = trimmed.strip_prefix('#') {
                let toks: Vec<&str> = header.split_whitespace().collect();
                if let ["users", m, "communities", c] = toks.as_slice() {
                    let m = m.parse().map_err(|_| malformed("bad user count".into()))?;
                    let c = c.parse().map_err(|_| malformed("bad community count".into()))?;
                    declared = Some((m, c));
                }
                continue;
            }
            if trimmed.is_empty() {
                continue;
            }
            let mut toks = trimmed.split_whitespace().map(|t| {
                t.parse::<u32>()
                    .map_err(|_| malformed(format!("`{t}` is not a non-negative integer")))
            });
            let user = toks.next().unwrap()? as usize;
            let row = toks.collect::<Result<Vec<u32>>>()?;
            if user >= rows.len() {
                rows.resize(user + 1, Vec::new());
            }
            rows[user] = row;
        }
        let inferred = rows.iter().flatten().map(|&c| c as usize + 1).max().unwrap_or(0);
        let (users, communities) = declared.unwrap_or((rows.len(), inferred));
        if rows.len() > users {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                line: 0,
                reason: format!("user id {} exceeds declared count {users}", rows.len() - 1),
            });
        }
        rows.resize(users, Vec::new());
        AffiliationMatrix::from_rows(rows, communities)
    }
}
