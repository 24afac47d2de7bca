//! Small file-writing helpers shared by every format in the crate.

use std::io::Write;
use std::path::Path;

/// Writes a sibling temp file and renames it over the target, so readers
/// never observe a half-written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::other("path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

/// UTF-8 convenience wrapper over [`atomic_write`].
pub fn atomic_write_text(path: &Path, text: &str) -> std::io::Result<()> {
    atomic_write(path, text.as_bytes())
}
