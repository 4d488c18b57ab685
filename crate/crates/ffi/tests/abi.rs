use std::ffi::{c_char, CStr, CString};
use std::ptr;

use spbandit_ffi::*;

const FIGURE_ONE: [f64; 15] = [
    0.85, 0.65, 0.15, 0.30, 0.45, //
    0.30, 0.90, 0.50, 0.60, 0.70, //
    0.10, 0.60, 0.25, 0.55, 0.95,
];

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        spb_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn figure_one(budget: u32) -> *mut SpbInstance {
    let mut inst = ptr::null_mut();
    let costs = [1u32; 5];
    let status = unsafe {
        spb_instance_new(
            3,
            5,
            FIGURE_ONE.as_ptr(),
            costs.as_ptr(),
            budget,
            100,
            &mut inst,
        )
    };
    assert_eq!(status, SpbStatus::Ok);
    inst
}

#[test]
fn solve_figure_one() {
    let inst = figure_one(5);
    let mut assignment = [0usize; 3];
    let mut value = 0.0;
    unsafe {
        assert_eq!(spb_instance_users(inst), 3);
        assert_eq!(spb_instance_arms(inst), 5);
        assert_eq!(
            spb_sp_matching(inst, assignment.as_mut_ptr(), &mut value),
            SpbStatus::Ok
        );
        assert!((value - 2.70).abs() < 1e-12);
        assert_eq!(assignment, [0, 1, 4]);

        let mut oracle = 0.0;
        assert_eq!(
            spb_brute_force_opt(inst, assignment.as_mut_ptr(), &mut oracle),
            SpbStatus::Ok
        );
        assert!((oracle - value).abs() < 1e-12);

        let mut v = 0.0;
        let all_arm_one = [1usize; 3];
        assert_eq!(
            spb_matching_value(inst, all_arm_one.as_ptr(), 3, &mut v),
            SpbStatus::Ok
        );
        assert!((v - 2.15).abs() < 1e-12);

        let (mut feasible, mut cost) = (false, 0u64);
        let pair = [0usize, 1, 1];
        assert_eq!(
            spb_matching_feasible(inst, pair.as_ptr(), 3, &mut feasible, &mut cost),
            SpbStatus::Ok
        );
        assert!(feasible);
        assert_eq!(cost, 2);

        let mut selected = [0usize; 5];
        let (mut len, mut greedy) = (0usize, 0.0);
        assert_eq!(
            spb_greedy_max(inst, selected.as_mut_ptr(), 5, &mut len, &mut greedy),
            SpbStatus::Ok
        );
        assert!(greedy >= 0.5 * value && greedy <= value + 1e-12);

        let mut order = [0usize; 5];
        assert_eq!(
            spb_extract_order(inst, 0.0, order.as_mut_ptr()),
            SpbStatus::Ok
        );
        let mut delta = 1.0;
        assert_eq!(
            spb_asp_delta(inst, order.as_ptr(), &mut delta),
            SpbStatus::Ok
        );
        assert_eq!(delta, 0.0);
        spb_instance_free(inst);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut inst = ptr::null_mut();
    let bad = [1.2f64];
    let costs = [1u32];
    unsafe {
        let s = spb_instance_new(1, 1, bad.as_ptr(), costs.as_ptr(), 1, 10, &mut inst);
        assert_eq!(s, SpbStatus::InvalidArgument);
        assert!(inst.is_null());
        assert!(last_error().contains("1.2"));

        let over = [2u32];
        let ok = [0.5f64];
        let s = spb_instance_new(1, 1, ok.as_ptr(), over.as_ptr(), 1, 10, &mut inst);
        assert_eq!(s, SpbStatus::InvalidArgument);

        let s = spb_instance_new(1, 1, ptr::null(), costs.as_ptr(), 1, 10, &mut inst);
        assert_eq!(s, SpbStatus::NullPointer);
        assert!(last_error().contains("theta"));

        let mut value = 0.0;
        assert_eq!(
            spb_sp_matching(ptr::null(), ptr::null_mut(), &mut value),
            SpbStatus::NullPointer
        );

        // Truncation keeps the terminator and reports the full length.
        let mut tiny = [0 as c_char; 4];
        let full = spb_last_error_message(tiny.as_mut_ptr(), tiny.len());
        assert!(full > 3);
        assert_eq!(CStr::from_ptr(tiny.as_ptr()).to_bytes().len(), 3);
    }
}

#[test]
fn non_single_peaked_matrix_is_reported() {
    // Three rows whose orders of preference cannot share one axis.
    let json = CString::new(
        r#"{"users":3,"arms":4,"theta":[[0.9,0.8,0.1,0.05],[0.1,0.9,0.8,0.05],[0.8,0.1,0.9,0.05]],
            "costs":[1,1,1,1],"budget":2,"horizon":10}"#,
    )
    .unwrap();
    let mut inst = ptr::null_mut();
    unsafe {
        assert_eq!(
            spb_instance_from_json(json.as_ptr(), &mut inst),
            SpbStatus::Ok
        );
        let mut assignment = [0usize; 3];
        let mut value = 0.0;
        assert_eq!(
            spb_sp_matching(inst, assignment.as_mut_ptr(), &mut value),
            SpbStatus::NotSinglePeaked
        );
        assert_eq!(
            spb_brute_force_opt(inst, assignment.as_mut_ptr(), &mut value),
            SpbStatus::Ok
        );
        spb_instance_free(inst);

        let broken = CString::new("{\"users\": 1").unwrap();
        assert_eq!(
            spb_instance_from_json(broken.as_ptr(), &mut inst),
            SpbStatus::InvalidArgument
        );
    }
}

#[test]
fn pq_tree_handle() {
    let mut tree = ptr::null_mut();
    unsafe {
        assert_eq!(spb_pqtree_new(0, &mut tree), SpbStatus::InvalidArgument);
        assert_eq!(spb_pqtree_new(5, &mut tree), SpbStatus::Ok);
        let mut ok = false;
        assert_eq!(
            spb_pqtree_reduce(tree, [0usize, 1].as_ptr(), 2, &mut ok),
            SpbStatus::Ok
        );
        assert!(ok);
        assert_eq!(
            spb_pqtree_reduce(tree, [1usize, 2].as_ptr(), 2, &mut ok),
            SpbStatus::Ok
        );
        assert!(ok);
        let mut count = 0u64;
        assert_eq!(spb_pqtree_frontier_count(tree, &mut count), SpbStatus::Ok);
        // [0 1 2] in either direction, as one block among the three blocks.
        assert_eq!(count, 2 * 6);
        assert_eq!(
            spb_pqtree_reduce(tree, [0usize, 2].as_ptr(), 2, &mut ok),
            SpbStatus::Ok
        );
        assert!(!ok);
        let mut after = 0u64;
        spb_pqtree_frontier_count(tree, &mut after);
        assert_eq!(after, count);
        let mut order = [0usize; 5];
        assert_eq!(spb_pqtree_frontier(tree, order.as_mut_ptr()), SpbStatus::Ok);
        let pos = |a: usize| order.iter().position(|&x| x == a).unwrap();
        assert_eq!(pos(0).abs_diff(pos(1)), 1);
        assert_eq!(pos(1).abs_diff(pos(2)), 1);
        assert_eq!(
            spb_pqtree_reduce(tree, [7usize].as_ptr(), 1, &mut ok),
            SpbStatus::InvalidArgument
        );
        spb_pqtree_free(tree);
        spb_pqtree_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(spb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
