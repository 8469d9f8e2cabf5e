use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Append-only JSON-lines file, exclusively locked while open. Every append
/// is flushed to disk before it returns; a torn final line left by a crash is
/// discarded on open.
#[derive(Debug)]
pub(crate) struct Log {
    file: File,
    len: u64,
    path: PathBuf,
}

impl Log {
    pub(crate) fn open<T: DeserializeOwned>(path: &Path) -> io::Result<(Self, Vec<T>)> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)?;
        file.try_lock().map_err(|e| match e {
            std::fs::TryLockError::WouldBlock => io::Error::new(
                io::ErrorKind::WouldBlock,
                format!("{} is in use by another process", path.display()),
            ),
            std::fs::TryLockError::Error(e) => e,
        })?;
        let mut raw = Vec::new();
        file.read_to_end(&mut raw)?;

        let mut entries = Vec::new();
        let mut good = 0usize;
        let mut offset = 0usize;
        while offset < raw.len() {
            let end = raw[offset..]
                .iter()
                .position(|&b| b == b'\n')
                .map(|p| offset + p);
            let line = &raw[offset..end.unwrap_or(raw.len())];
            match (end, serde_json::from_slice::<T>(line)) {
                (Some(end), Ok(entry)) => {
                    entries.push(entry);
                    offset = end + 1;
                    good = offset;
                }
                (None, _) => break,
                (Some(end), Err(e)) => {
                    if end + 1 == raw.len() {
                        break;
                    }
                    return Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("{}: corrupt entry at byte {offset}: {e}", path.display()),
                    ));
                }
            }
        }
        if good < raw.len() {
            file.set_len(good as u64)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok((
            Self {
                file,
                len: good as u64,
                path: path.to_path_buf(),
            },
            entries,
        ))
    }

    pub(crate) fn append<T: Serialize>(&mut self, entries: &[T]) -> io::Result<()> {
        let mut buf = Vec::new();
        for e in entries {
            serde_json::to_writer(&mut buf, e).map_err(io::Error::other)?;
            buf.push(b'\n');
        }
        let result = self
            .file
            .write_all(&buf)
            .and_then(|_| self.file.sync_data());
        match result {
            Ok(()) => {
                self.len += buf.len() as u64;
                Ok(())
            }
            Err(e) => {
                // leave no partial line behind for the next append
                let _ = self.file.set_len(self.len);
                Err(e)
            }
        }
    }

    pub(crate) fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replays_and_drops_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log");
        {
            let (mut log, entries) = Log::open::<u32>(&path).unwrap();
            assert!(entries.is_empty());
            log.append(&[1u32, 2]).unwrap();
            log.append(&[3u32]).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"4").unwrap();
        drop(f);

        let (mut log, entries) = Log::open::<u32>(&path).unwrap();
        assert_eq!(entries, vec![1, 2, 3]);
        log.append(&[5u32]).unwrap();
        drop(log);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "1\n2\n3\n5\n");
    }

    #[test]
    fn second_opener_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log");
        let (first, _) = Log::open::<u32>(&path).unwrap();
        assert_eq!(
            Log::open::<u32>(&path).unwrap_err().kind(),
            io::ErrorKind::WouldBlock
        );
        drop(first);
        assert!(Log::open::<u32>(&path).is_ok());
    }

    #[test]
    fn corrupt_middle_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log");
        std::fs::write(&path, "1\nxx\n3\n").unwrap();
        assert!(Log::open::<u32>(&path).is_err());
    }
}
