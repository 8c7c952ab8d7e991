use std::time::Duration;

use futures::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

use pursuit_core::kinematics::WheelCommand;
use pursuit_service::{spawn, OutboundMsg, Role, ServeConfig, ServiceHandle};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start(realtime_factor: f64) -> (ServiceHandle, Ws) {
    let handle = spawn(ServeConfig {
        port: 0,
        realtime_factor,
        ..ServeConfig::default()
    })
    .await
    .unwrap();
    let (ws, _) = connect_async(format!("ws://{}/ws", handle.addr)).await.unwrap();
    (handle, ws)
}

async fn next(ws: &mut Ws) -> OutboundMsg {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("frame within 5 s")
            .expect("stream open")
            .expect("valid frame");
        if let Message::Text(text) = msg {
            let value: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(value["v"], 1, "{text}");
            return serde_json::from_value(value).unwrap();
        }
    }
}

async fn send(ws: &mut Ws, text: &str) {
    ws.send(Message::text(text)).await.unwrap();
}

fn leader_command(msg: &OutboundMsg) -> Option<(u64, WheelCommand)> {
    match msg {
        OutboundMsg::State { tick, vehicles, .. } => {
            assert_eq!(vehicles[0].role, Role::Leader);
            Some((*tick, vehicles[0].command))
        }
        _ => None,
    }
}

#[tokio::test]
async fn connect_gets_catalog_then_state() {
    let (handle, mut ws) = start(1.0).await;
    match next(&mut ws).await {
        OutboundMsg::Catalog {
            scenarios,
            policies,
            current_scenario,
            follower_policy,
            ..
        } => {
            assert_eq!(current_scenario, "human_leader");
            assert!(scenarios.contains(&"human_leader".to_string()));
            assert!(policies.contains(&"tail_chase".to_string()));
            assert!(!policies.contains(&"human".to_string()));
            assert_eq!(follower_policy, "light_follow");
        }
        other => panic!("expected catalog, got {other:?}"),
    }
    assert!(matches!(next(&mut ws).await, OutboundMsg::State { .. }));
    handle.shutdown().await.unwrap();
}

#[tokio::test]
async fn malformed_frame_gets_error_and_stream_continues() {
    let (handle, mut ws) = start(1.0).await;
    send(&mut ws, "{not json").await;
    let mut saw_error = false;
    let mut states_after = 0;
    for _ in 0..200 {
        match next(&mut ws).await {
            OutboundMsg::Error { message, .. } => {
                assert!(message.contains("JSON"), "{message}");
                saw_error = true;
            }
            OutboundMsg::State { .. } if saw_error => {
                states_after += 1;
                if states_after == 3 {
                    break;
                }
            }
            _ => {}
        }
    }
    assert!(saw_error);
    assert_eq!(states_after, 3);
    handle.shutdown().await.unwrap();
}

#[tokio::test]
async fn state_is_consistent_and_ticks_increase() {
    let (handle, mut ws) = start(0.25).await;
    let mut last_tick = None;
    let mut seen = 0;
    while seen < 40 {
        if let OutboundMsg::State {
            episode,
            tick,
            time,
            vehicles,
            separation,
            ..
        } = next(&mut ws).await
        {
            assert_eq!(episode, 0);
            // Below real time only every second tick is broadcast.
            if let Some(prev) = last_tick {
                assert_eq!(tick, prev + 2, "{tick} after {prev}");
            } else {
                assert_eq!(tick % 2, 0);
            }
            last_tick = Some(tick);
            let d = vehicles[0].pose.position - vehicles[1].pose.position;
            assert!((d.norm() - separation).abs() <= 1e-9);
            assert!(time >= 0.0);
            seen += 1;
        }
    }
    handle.shutdown().await.unwrap();
}

#[tokio::test]
async fn drive_reaches_leader_then_dead_man_stops_it() {
    let (handle, mut ws) = start(1.0).await;
    send(
        &mut ws,
        r#"{"v":1,"type":"drive","drive":{"throttle":0.6,"steer":0.4}}"#,
    )
    .await;
    let mut moving = Vec::new();
    let mut stopped_at = None;
    for _ in 0..500 {
        let msg = next(&mut ws).await;
        let Some((tick, cmd)) = leader_command(&msg) else {
            continue;
        };
        if cmd != WheelCommand::STOP {
            assert!((cmd.left - 0.2).abs() < 1e-12 && cmd.right == 1.0, "{cmd:?}");
            moving.push(tick);
        } else if !moving.is_empty() {
            stopped_at = Some(tick);
            break;
        }
    }
    let first = moving[0];
    let stopped_at = stopped_at.expect("leader stops after silence");
    // Half a second of 0.02 s ticks holds the command; the next tick stops.
    assert_eq!(stopped_at - first, 26, "moving ticks {moving:?}");
    handle.shutdown().await.unwrap();
}

#[tokio::test]
async fn set_policy_restarts_episode_for_every_client() {
    let (handle, mut a) = start(1.0).await;
    let (mut b, _) = connect_async(format!("ws://{}/ws", handle.addr)).await.unwrap();
    send(&mut a, r#"{"v":1,"type":"set_policy","policy_name":"tail_chase"}"#).await;
    for ws in [&mut a, &mut b] {
        let mut saw_catalog = false;
        loop {
            match next(ws).await {
                OutboundMsg::Catalog { follower_policy, .. } if follower_policy == "tail_chase" => saw_catalog = true,
                OutboundMsg::State { episode: 1, tick, .. } => {
                    assert!(saw_catalog);
                    assert!(tick <= 5);
                    break;
                }
                _ => {}
            }
        }
    }
    send(
        &mut b,
        r#"{"v":1,"type":"select_scenario","scenario_name":"zigzag_sweep"}"#,
    )
    .await;
    loop {
        if let OutboundMsg::Error { message, .. } = next(&mut b).await {
            assert!(message.contains("zigzag_sweep"), "{message}");
            break;
        }
    }
    handle.shutdown().await.unwrap();
}
