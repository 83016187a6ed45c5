//! Parsers for esearch and efetch XML payloads.

use crate::corpus::{Author, PublicationRecord};
use crate::xml::{ends_with, squash, walk, Node, XmlError};

/// One page of an esearch result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchPage {
    pub count: usize,
    pub ids: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("malformed esearch envelope: {0}")]
    Envelope(String),
}

pub fn parse_esearch(xml: &str) -> Result<SearchPage, ParseError> {
    let mut count: Option<String> = None;
    let mut ids: Vec<String> = Vec::new();
    let mut error: Option<String> = None;
    let mut root: Option<String> = None;
    walk(xml, |stack, node| {
        if root.is_none() {
            root = stack.first().cloned();
        }
        match node {
            Node::Open if ends_with(stack, &["eSearchResult", "IdList", "Id"]) => ids.push(String::new()),
            Node::Text(t) if stack == ["eSearchResult", "Count"] => {
                count.get_or_insert_with(String::new).push_str(t)
            }
            Node::Text(t) if ends_with(stack, &["eSearchResult", "IdList", "Id"]) => {
                if let Some(last) = ids.last_mut() {
                    last.push_str(t.trim())
                }
            }
            Node::Text(t) if stack == ["eSearchResult", "ERROR"] => error = Some(squash(t)),
            _ => {}
        }
        Ok(())
    })?;
    if root.as_deref() != Some("eSearchResult") {
        return Err(ParseError::Envelope(format!(
            "expected <eSearchResult> root, found {}",
            root.map(|r| format!("<{r}>")).unwrap_or_else(|| "an empty document".into())
        )));
    }
    if let Some(e) = error {
        return Err(ParseError::Envelope(e));
    }
    let count = count
        .ok_or_else(|| ParseError::Envelope("missing <Count>".into()))?
        .trim()
        .parse::<usize>()
        .map_err(|e| ParseError::Envelope(format!("bad <Count>: {e}")))?;
    Ok(SearchPage { count, ids })
}

#[derive(Default)]
struct AuthorParts {
    last: String,
    fore: String,
    initials: String,
    collective: String,
}

#[derive(Default)]
struct ArticleBuilder {
    pmid: Option<String>,
    title: String,
    abstract_segments: Vec<String>,
    mesh: Vec<String>,
    authors: Vec<Author>,
    author: Option<AuthorParts>,
    pub_year: String,
    medline_date: String,
}

fn contains_seq(stack: &[String], seq: &[&str]) -> bool {
    stack.windows(seq.len()).any(|w| w.iter().zip(seq).all(|(a, b)| a == b))
}

/// First run of exactly four ASCII digits.
pub(crate) fn first_year(text: &str) -> Option<i32> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i - start == 4 {
                return text[start..i].parse().ok();
            }
        } else {
            i += 1;
        }
    }
    None
}

impl ArticleBuilder {
    fn finish(self) -> Result<PublicationRecord, String> {
        let pmid = self
            .pmid
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty())
            .ok_or_else(|| "PubmedArticle without MedlineCitation/PMID".to_string())?;
        let year = first_year(&self.pub_year).or_else(|| first_year(&self.medline_date));
        let mut rec = PublicationRecord {
            pmid,
            title: squash(&self.title),
            abstract_text: self
                .abstract_segments
                .iter()
                .map(|s| squash(s))
                .filter(|s| !s.is_empty())
                .collect::<Vec<_>>()
                .join(" "),
            mesh_terms: self.mesh.iter().map(|m| squash(m)).filter(|m| !m.is_empty()).collect(),
            authors: self.authors,
            year,
            notes: Vec::new(),
        };
        rec.dedup_mesh_terms();
        Ok(rec)
    }
}

/// Parses an efetch `PubmedArticleSet` into one record per `PubmedArticle`.
pub fn parse_efetch(xml: &str) -> Result<Vec<PublicationRecord>, XmlError> {
    let mut out = Vec::new();
    let mut cur: Option<ArticleBuilder> = None;
    walk(xml, |stack, node| {
        let in_article = stack.iter().any(|s| s == "PubmedArticle");
        if !in_article {
            return Ok(());
        }
        match node {
            Node::Open => {
                let name = stack.last().map(String::as_str).unwrap_or("");
                if name == "PubmedArticle" {
                    cur = Some(ArticleBuilder::default());
                    return Ok(());
                }
                let Some(b) = cur.as_mut() else { return Ok(()) };
                if ends_with(stack, &["Article", "Abstract", "AbstractText"]) {
                    b.abstract_segments.push(String::new());
                } else if ends_with(stack, &["MeshHeading", "DescriptorName"]) {
                    b.mesh.push(String::new());
                } else if ends_with(stack, &["Article", "AuthorList", "Author"]) {
                    b.author = Some(AuthorParts::default());
                } else if ends_with(stack, &["PubmedArticle", "MedlineCitation", "PMID"]) && b.pmid.is_none() {
                    b.pmid = Some(String::new());
                }
            }
            Node::Text(t) => {
                let Some(b) = cur.as_mut() else { return Ok(()) };
                if contains_seq(stack, &["MedlineCitation", "PMID"]) && stack.len() >= 2 && stack[stack.len() - 2] == "MedlineCitation" {
                    if let Some(p) = b.pmid.as_mut() {
                        if p.is_empty() {
                            p.push_str(t);
                        }
                    }
                } else if contains_seq(stack, &["Article", "ArticleTitle"]) {
                    b.title.push_str(t);
                } else if contains_seq(stack, &["Article", "Abstract", "AbstractText"]) {
                    if let Some(seg) = b.abstract_segments.last_mut() {
                        seg.push_str(t);
                    }
                } else if contains_seq(stack, &["MeshHeading", "DescriptorName"]) {
                    if let Some(m) = b.mesh.last_mut() {
                        m.push_str(t);
                    }
                } else if contains_seq(stack, &["AuthorList", "Author"]) {
                    if let Some(a) = b.author.as_mut() {
                        if contains_seq(stack, &["Author", "LastName"]) {
                            a.last.push_str(t);
                        } else if contains_seq(stack, &["Author", "ForeName"]) {
                            a.fore.push_str(t);
                        } else if contains_seq(stack, &["Author", "Initials"]) {
                            a.initials.push_str(t);
                        } else if contains_seq(stack, &["Author", "CollectiveName"]) {
                            a.collective.push_str(t);
                        }
                    }
                } else if contains_seq(stack, &["JournalIssue", "PubDate", "Year"]) {
                    b.pub_year.push_str(t);
                } else if contains_seq(stack, &["JournalIssue", "PubDate", "MedlineDate"]) {
                    b.medline_date.push_str(t);
                }
            }
            Node::Close => {
                let name = stack.last().map(String::as_str).unwrap_or("");
                if name == "PubmedArticle" {
                    if let Some(b) = cur.take() {
                        out.push(b.finish()?);
                    }
                } else if ends_with(stack, &["Article", "AuthorList", "Author"]) {
                    if let Some(b) = cur.as_mut() {
                        if let Some(a) = b.author.take() {
                            let last = if a.last.trim().is_empty() { a.collective } else { a.last };
                            let fore = if a.fore.trim().is_empty() { a.initials } else { a.fore };
                            b.authors.push(Author::new(squash(&last), squash(&fore)));
                        }
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_ARTICLE: &str = r#"<?xml version="1.0" ?>
<!DOCTYPE PubmedArticleSet PUBLIC "-//NLM//DTD PubMedArticle, 1st January 2024//EN" "https://dtd.nlm.nih.gov/ncbi/pubmed/out/pubmed_240101.dtd">
<PubmedArticleSet>
 <PubmedArticle>
  <MedlineCitation Status="MEDLINE" Owner="NLM">
   <PMID Version="1">31000001</PMID>
   <Article PubModel="Print">
    <Journal>
     <JournalIssue CitedMedium="Internet">
      <PubDate><Year>2019</Year><Month>Mar</Month></PubDate>
     </JournalIssue>
    </Journal>
    <ArticleTitle>Criteria2Query: a <i>natural language</i> interface.</ArticleTitle>
    <Abstract>
     <AbstractText Label="OBJECTIVE">We aim to
       translate eligibility criteria.</AbstractText>
     <AbstractText Label="RESULTS">Queries were accurate &amp; fast.</AbstractText>
    </Abstract>
    <AuthorList CompleteYN="Y">
     <Author ValidYN="Y"><LastName>Yuan</LastName><ForeName>Chi</ForeName><Initials>C</Initials></Author>
     <Author ValidYN="Y"><LastName>Alvarez</LastName><ForeName>Jordan</ForeName><Initials>J</Initials></Author>
     <Author ValidYN="Y"><CollectiveName>OHDSI Consortium</CollectiveName></Author>
    </AuthorList>
   </Article>
   <MeshHeadingList>
    <MeshHeading><DescriptorName UI="D009323" MajorTopicYN="N">Natural Language Processing</DescriptorName></MeshHeading>
    <MeshHeading><DescriptorName UI="D002986" MajorTopicYN="Y">Clinical Trials as Topic</DescriptorName><QualifierName UI="Q000379">methods</QualifierName></MeshHeading>
    <MeshHeading><DescriptorName UI="D006801" MajorTopicYN="N">Humans</DescriptorName></MeshHeading>
    <MeshHeading><DescriptorName UI="D006801" MajorTopicYN="N">humans</DescriptorName></MeshHeading>
   </MeshHeadingList>
   <CommentsCorrectionsList>
    <CommentsCorrections RefType="Cites"><PMID Version="1">11111111</PMID></CommentsCorrections>
   </CommentsCorrectionsList>
  </MedlineCitation>
 </PubmedArticle>
</PubmedArticleSet>"#;

    #[test]
    fn parses_structured_abstract_and_mesh() {
        let recs = parse_efetch(ONE_ARTICLE).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.pmid, "31000001");
        assert_eq!(r.title, "Criteria2Query: a natural language interface.");
        assert_eq!(
            r.abstract_text,
            "We aim to translate eligibility criteria. Queries were accurate & fast."
        );
        assert_eq!(
            r.mesh_terms,
            vec!["Natural Language Processing", "Clinical Trials as Topic", "Humans"]
        );
        assert_eq!(r.year, Some(2019));
        assert_eq!(r.authors.len(), 3);
        assert_eq!(r.authors[1], Author::new("Alvarez", "Jordan"));
        assert_eq!(r.authors[2].last_name, "OHDSI Consortium");
    }

    #[test]
    fn missing_abstract_gives_empty_text_and_medline_date_fallback() {
        let xml = r#"<PubmedArticleSet><PubmedArticle><MedlineCitation><PMID>42</PMID>
            <Article><Journal><JournalIssue><PubDate><MedlineDate>2015 Nov-Dec</MedlineDate></PubDate></JournalIssue></Journal>
            <ArticleTitle>Editorial.</ArticleTitle></Article></MedlineCitation></PubmedArticle></PubmedArticleSet>"#;
        let r = &parse_efetch(xml).unwrap()[0];
        assert_eq!(r.abstract_text, "");
        assert_eq!(r.year, Some(2015));
        assert!(r.mesh_terms.is_empty());
    }

    #[test]
    fn truncated_document_names_element() {
        let cut = &ONE_ARTICLE[..ONE_ARTICLE.find("</ArticleTitle>").unwrap()];
        let err = parse_efetch(cut).unwrap_err();
        assert!(err.path.ends_with("Article/ArticleTitle"), "{err}");
        assert!(err.to_string().contains("ArticleTitle"));
    }

    #[test]
    fn year_helper() {
        assert_eq!(first_year("2019"), Some(2019));
        assert_eq!(first_year("Winter 1998-1999"), Some(1998));
        assert_eq!(first_year("12345 x"), None);
        assert_eq!(first_year(""), None);
    }

    #[test]
    fn esearch_pages() {
        let xml = r#"<?xml version="1.0"?><eSearchResult><Count>3</Count><RetMax>2</RetMax><RetStart>0</RetStart>
            <IdList><Id>1</Id><Id>22</Id></IdList></eSearchResult>"#;
        let page = parse_esearch(xml).unwrap();
        assert_eq!(page, SearchPage { count: 3, ids: vec!["1".into(), "22".into()] });
        assert!(matches!(parse_esearch("<html></html>"), Err(ParseError::Envelope(_))));
        assert!(matches!(
            parse_esearch("<eSearchResult><ERROR>Invalid db</ERROR></eSearchResult>"),
            Err(ParseError::Envelope(m)) if m == "Invalid db"
        ));
    }
}
