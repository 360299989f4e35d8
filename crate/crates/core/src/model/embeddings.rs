use std::collections::HashMap;
use std::path::Path;

use super::Model;
use crate::error::{Error, Result};

/// Initialise embedding rows from a text file with one `token v1 v2 …` entry
/// per line. Tokens absent from the file keep their uniform initialisation.
/// Applies to every embedding table of the model; returns the number of rows
/// replaced.
pub fn load_pretrained(model: &mut Model, path: &Path) -> Result<usize> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let dim = model.config.embedding;
    let mut vectors: HashMap<&str, Vec<f64>> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let values: std::result::Result<Vec<f64>, _> = parts.map(str::parse).collect();
        let values = values.map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        // a word2vec-style "count dim" header line
        if i == 0 && values.len() == 1 {
            continue;
        }
        if values.len() != dim {
            return Err(Error::Data(format!(
                "{}:{}: expected {dim} values, found {}",
                path.display(),
                i + 1,
                values.len()
            )));
        }
        vectors.insert(token, values);
    }
    let mut replaced = 0;
    let tables = [
        ("amr_embedding", &model.vocab.amr),
        ("word_embedding", &model.vocab.words),
    ];
    let mut updates = Vec::new();
    for (name, vocab) in tables {
        let Some(id) = model.params.id(name) else { continue };
        for (row, token) in vocab.tokens().iter().enumerate() {
            if let Some(v) = vectors.get(token.as_str()) {
                updates.push((id, row, v.clone()));
            }
        }
    }
    for (id, row, v) in updates {
        let t = model.params.get_mut(id);
        t.data_mut()[row * dim..(row + 1) * dim].copy_from_slice(&v);
        replaced += 1;
    }
    Ok(replaced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::tiny_vocab;
    use crate::model::{Architecture, ModelConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn listed_tokens_replace_rows_and_others_keep_init() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = Model::new(ModelConfig::new(Architecture::Joint, 3, 4), tiny_vocab(), &mut rng).unwrap();
        let before = m.clone();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        std::fs::write(&path, "the 1 2 3\nnot-a-token 4 5 6\n").unwrap();
        let n = load_pretrained(&mut m, &path).unwrap();
        let id = m.params.id("word_embedding").unwrap();
        let row = m.vocab.words.lookup("the");
        assert_eq!(n, 1 + usize::from(m.vocab.amr.get("the").is_some()));
        assert_eq!(&m.params.get(id).data()[row * 3..row * 3 + 3], &[1.0, 2.0, 3.0]);
        let other = (row + 1) * 3;
        assert_eq!(m.params.get(id).data()[other], before.params.get(id).data()[other]);
    }

    #[test]
    fn wrong_dimension_is_a_data_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = Model::new(ModelConfig::new(Architecture::Joint, 3, 4), tiny_vocab(), &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        std::fs::write(&path, "the 1 2\n").unwrap();
        assert!(matches!(load_pretrained(&mut m, &path), Err(Error::Data(_))));
    }
}
