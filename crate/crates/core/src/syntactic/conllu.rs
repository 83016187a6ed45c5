use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SyntacticError;

/// One word line. `head` is 1-based with 0 for the root, as in the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConlluToken {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl ConlluToken {
    /// Lowercased lemma, or the form when the lemma is unspecified.
    pub fn lemma_key(&self) -> String {
        if self.lemma.is_empty() || self.lemma == "_" { &self.form } else { &self.lemma }.to_lowercase()
    }

    pub fn has_feature(&self, name: &str, value: &str) -> bool {
        self.feats.split('|').any(|f| f.split_once('=') == Some((name, value)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub comments: Vec<String>,
    pub tokens: Vec<ConlluToken>,
    /// 0-based position of the token whose head is 0.
    pub root_index: usize,
}

impl ParsedSentence {
    /// 0-based head position of every token, `None` for the root.
    pub fn heads(&self) -> Vec<Option<usize>> {
        self.tokens.iter().map(|t| t.head.checked_sub(1)).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn parse_token(line: &str, lineno: usize) -> Result<Option<ConlluToken>, SyntacticError> {
    let bad = |message: String| SyntacticError::Malformed { file: None, line: lineno, message };
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(bad(format!("expected 10 tab-separated columns, found {}", cols.len())));
    }
    if cols[0].contains('-') || cols[0].contains('.') {
        return Ok(None);
    }
    let id: usize = cols[0].parse().map_err(|_| bad(format!("bad token id '{}'", cols[0])))?;
    let head: usize = cols[6].parse().map_err(|_| bad(format!("bad head '{}'", cols[6])))?;
    Ok(Some(ConlluToken {
        id,
        form: cols[1].into(),
        lemma: cols[2].into(),
        upos: cols[3].into(),
        xpos: cols[4].into(),
        feats: cols[5].into(),
        head,
        deprel: cols[7].into(),
        deps: cols[8].into(),
        misc: cols[9].into(),
    }))
}

fn finish(comments: Vec<String>, tokens: Vec<ConlluToken>, first_line: usize) -> Result<ParsedSentence, SyntacticError> {
    let n = tokens.len();
    for (i, t) in tokens.iter().enumerate() {
        if t.id != i + 1 {
            return Err(SyntacticError::Malformed { file: None, line: first_line + i, message: format!("token id {} out of sequence", t.id) });
        }
        if t.head > n {
            return Err(SyntacticError::Malformed { file: None, line: first_line + i, message: format!("head {} outside sentence of {n} tokens", t.head) });
        }
    }
    let roots: Vec<usize> = (0..n).filter(|&i| tokens[i].head == 0).collect();
    match roots.len() {
        1 => {}
        0 => return Err(SyntacticError::NoRoot { file: None, line: first_line }),
        _ => return Err(SyntacticError::MultipleRoots { file: None, line: first_line, count: roots.len() }),
    }
    for start in 0..n {
        let mut cur = start;
        for _ in 0..=n {
            match tokens[cur].head {
                0 => break,
                h => cur = h - 1,
            }
        }
        if tokens[cur].head != 0 {
            return Err(SyntacticError::Cycle { file: None, line: first_line, token: start + 1 });
        }
    }
    Ok(ParsedSentence { comments, tokens, root_index: roots[0] })
}

pub fn parse_conllu_str(text: &str) -> Result<Vec<ParsedSentence>, SyntacticError> {
    let mut out = Vec::new();
    let mut comments = Vec::new();
    let mut tokens = Vec::new();
    let mut first = 0;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !tokens.is_empty() {
                out.push(finish(std::mem::take(&mut comments), std::mem::take(&mut tokens), first)?);
            }
            comments.clear();
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim_start().to_string());
            continue;
        }
        if let Some(tok) = parse_token(line, lineno)? {
            if tokens.is_empty() {
                first = lineno;
            }
            tokens.push(tok);
        }
    }
    if !tokens.is_empty() {
        out.push(finish(comments, tokens, first)?);
    }
    Ok(out)
}

pub fn parse_conllu(path: &Path) -> Result<Vec<ParsedSentence>, SyntacticError> {
    let text = std::fs::read_to_string(path).map_err(|source| SyntacticError::Io { path: path.to_path_buf(), source })?;
    parse_conllu_str(&text).map_err(|e| e.in_file(path))
}

pub fn write_conllu(sentences: &[ParsedSentence]) -> String {
    let mut s = String::new();
    for sent in sentences {
        for c in &sent.comments {
            let _ = writeln!(s, "# {c}");
        }
        for t in &sent.tokens {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                t.id, t.form, t.lemma, t.upos, t.xpos, t.feats, t.head, t.deprel, t.deps, t.misc
            );
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO: &str = "# sent_id = 1\n# text = Dogs bark.\n\
1\tDogs\tdog\tNOUN\tNNS\tNumber=Plur\t2\tnsubj\t_\t_\n\
2\tbark\tbark\tVERB\tVBP\t_\t0\troot\t_\tSpaceAfter=No\n\
3\t.\t.\tPUNCT\t.\t_\t2\tpunct\t_\t_\n\
\n\
# sent_id = 2\n\
1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tdo\tdo\tAUX\tVBP\t_\t3\taux\t_\t_\n\
2\tn't\tnot\tPART\tRB\t_\t3\tadvmod\t_\t_\n\
3\tstop\tstop\tVERB\tVB\t_\t0\troot\t_\t_\n\
3.1\tgo\tgo\tVERB\t_\t_\t_\t_\t3:conj\t_\n";

    #[test]
    fn parses_two_sentences() {
        let s = parse_conllu_str(TWO).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].heads(), vec![Some(1), None, Some(1)]);
        assert_eq!(s[0].root_index, 1);
        assert_eq!(s[0].comments, vec!["sent_id = 1", "text = Dogs bark."]);
        assert_eq!(s[1].heads(), vec![Some(2), Some(2), None]);
        assert_eq!(s[1].tokens.len(), 3);
    }

    #[test]
    fn structural_errors() {
        let cycle = "1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n3\tc\tc\tX\t_\t_\t0\troot\t_\t_\n";
        assert!(matches!(parse_conllu_str(cycle), Err(SyntacticError::Cycle { .. })));
        let two_roots = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t0\troot\t_\t_\n";
        assert!(matches!(parse_conllu_str(two_roots), Err(SyntacticError::MultipleRoots { count: 2, .. })));
        let short = "# c\n1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\n";
        assert!(matches!(parse_conllu_str(short), Err(SyntacticError::Malformed { line: 3, .. })));
        assert!(parse_conllu_str("").unwrap().is_empty());
    }

    fn arb_sentence() -> impl Strategy<Value = ParsedSentence> {
        (1usize..8).prop_flat_map(|n| {
            // Each token i > 0 attaches to some earlier token, so the tree is valid.
            let heads = (1..n).map(|i| 0..i).collect::<Vec<_>>();
            (Just(n), heads, prop::collection::vec("[a-z]{1,6}", n), prop::collection::vec(prop::sample::select(vec!["NOUN", "VERB", "ADP", "DET"]), n))
        })
        .prop_map(|(n, heads, forms, tags)| {
            let tokens = (0..n)
                .map(|i| ConlluToken {
                    id: i + 1,
                    form: forms[i].clone(),
                    lemma: forms[i].clone(),
                    upos: tags[i].to_string(),
                    xpos: "_".into(),
                    feats: "_".into(),
                    head: if i == 0 { 0 } else { heads[i - 1] + 1 },
                    deprel: if i == 0 { "root".into() } else { "dep".into() },
                    deps: "_".into(),
                    misc: "_".into(),
                })
                .collect();
            ParsedSentence { comments: vec!["text = x".into()], tokens, root_index: 0 }
        })
    }

    proptest! {
        #[test]
        fn round_trip(sents in prop::collection::vec(arb_sentence(), 0..4)) {
            let text = write_conllu(&sents);
            prop_assert_eq!(parse_conllu_str(&text).unwrap(), sents);
        }
    }
}
